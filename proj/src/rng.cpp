#include "qmcmc/rng.hpp"

#include <cmath>

namespace qmcmc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
  return splitmix64(splitmix64(parent) ^ (stream * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL));
}

double hash_uniform(std::uint64_t seed) {
  return static_cast<double>(splitmix64(seed) >> 11) * 0x1.0p-53;
}

Vector hash_unit_sphere(std::uint64_t seed, int d) {
  Vector v(d);
  std::uint64_t k = 0;
  for (;;) {
    for (int i = 0; i < d; ++i) {
      double u1 = hash_uniform(derive_seed(seed, k++));
      const double u2 = hash_uniform(derive_seed(seed, k++));
      if (u1 <= 0.0) u1 = 0x1.0p-53;
      v[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    const double n = v.norm();
    if (n > 0.0) return v / n;
  }
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  // Box-Muller on our own uniforms keeps streams identical across standard libraries.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t Rng::uniform_int(std::uint64_t lo, std::uint64_t hi) {
  const std::uint64_t span = hi - lo + 1;
  if (span == 0) return engine_();
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t r = engine_();
  while (r >= limit) r = engine_();
  return lo + r % span;
}

Vector Rng::normal_vector(int d) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = normal();
  return v;
}

Vector Rng::unit_sphere(int d) {
  Vector v = normal_vector(d);
  double n = v.norm();
  while (n == 0.0) {
    v = normal_vector(d);
    n = v.norm();
  }
  return v / n;
}

Vector Rng::unit_ball(int d) {
  return unit_sphere(d) * std::pow(uniform(), 1.0 / d);
}

}  // namespace qmcmc
