#pragma once

#include "qmcmc/rng.hpp"
#include "qmcmc/types.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

namespace qmcmc {

struct GridSpec {
  int d = 1;
  double l = 0.0;       // side length of the evaluation cube
  int bits_b = 1;       // N = 2^bits_b grid points per axis
  int bits_b0 = 1;      // phases kept to 1/N0, N0 = 2^bits_b0
  Vector x0;
  double L_jordan = 1.0;  // gradient-norm bound, output range [-L, L)
  double beta = 1.0;      // smoothness
  double eps = 0.0;       // evaluation error

  double N() const { return std::ldexp(1.0, bits_b); }
  double N0() const { return std::ldexp(1.0, bits_b0); }
  // Per-coordinate error scale 1500 sqrt(d eps beta) with a configurable constant.
  double error_bound(double constant = 1500.0) const;
};

inline constexpr int kUnlimitedQubits = 0;

// Largest bits_b with 24 pi sqrt(d eps beta)/L <= 1/N <= 48 pi sqrt(d eps beta)/L and the
// smallest bits_b0 with N eps/(2 L l) <= 1/N0 <= N eps/(L l).
GridSpec build_grid(int d, double eps, double L_jordan, double beta, const Vector& x0,
                    int qubit_budget = 24);

class Statevector {
 public:
  Statevector(int d, int bits);

  int dim() const { return d_; }
  int bits() const { return bits_; }
  std::size_t axis_size() const { return std::size_t{1} << bits_; }
  std::vector<std::complex<double>>& amplitudes() { return amp_; }
  const std::vector<std::complex<double>>& amplitudes() const { return amp_; }
  double norm() const;

  void set_uniform();
  // out[m] = N^{-1/2} sum_j exp(-+2 pi i (m - N/2)(j - N/2)/N) in[j] along one register.
  void inverse_qft(int axis);
  void forward_qft(int axis);

  // Exact categorical draw over basis states; returns per-register indices.
  std::vector<std::uint64_t> measure(Rng& rng) const;

 private:
  void shifted_dft(int axis, bool inverse);

  int d_;
  int bits_;
  std::vector<std::complex<double>> amp_;
};

struct JordanTrace {
  double norm_superposition = 0.0;
  double norm_phase = 0.0;
  double norm_qft = 0.0;
  std::vector<std::int64_t> k;
};

// One run of the grid-phase / inverse-QFT gradient estimator on f around spec.x0.
// f may carry evaluation error up to spec.eps.
Vector jordan_gradient(const std::function<double(const Vector&)>& f, const GridSpec& spec,
                       Rng& rng, JordanTrace* trace = nullptr);

// ceil(sqrt(24 ln(8 M^2 / (3 sigma_hat^2)))), at least 1.
int median_repetitions(double M, double sigma_hat);

// Hoeffding count for runs that succeed independently with probability p > 1/2:
// P(no majority) <= exp(-2 T (p - 1/2)^2) <= 3 sigma_hat^2 / (8 M^2).
int chernoff_median_repetitions(double M, double sigma_hat, double p);

// Coordinate-wise median (lower median for even T) of T runs, zeroed if its norm exceeds M.
Vector robust_median_gradient(const std::function<Vector()>& run, int T, double M);

// In-place radix-2 FFT, sign -1 forward, unnormalized. Size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

}  // namespace qmcmc
