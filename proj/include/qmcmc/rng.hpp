#pragma once

#include "qmcmc/types.hpp"

#include <cstdint>
#include <random>

namespace qmcmc {

std::uint64_t splitmix64(std::uint64_t x);

// Child seed for a named sub-stream; independent of how much the parent was used.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

// Maps a seed to a uniform double in [0, 1) without touching any engine.
double hash_uniform(std::uint64_t seed);

// Uniform direction on the unit sphere as a pure function of a seed (no engine state).
Vector hash_unit_sphere(std::uint64_t seed, int d);

// Well-known stream labels so that call sites never collide.
enum class Stream : std::uint64_t {
  Chain = 0x100,
  Momentum = 0x101,
  Provider = 0x102,
  Phase = 0x103,
  Noise = 0x104,
  Init = 0x105,
  Bootstrap = 0x106,
  Trial = 0x107,
  Model = 0x108,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }
  Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }
  Rng split(Stream s) const { return split(static_cast<std::uint64_t>(s)); }
  Rng split(Stream s, std::uint64_t index) const {
    return Rng(derive_seed(derive_seed(seed_, static_cast<std::uint64_t>(s)), index));
  }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double normal();
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);  // inclusive
  Vector normal_vector(int d);
  Vector unit_sphere(int d);
  Vector unit_ball(int d);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace qmcmc
