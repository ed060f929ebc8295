#include "qmcmc/jordan.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qmcmc {

double GridSpec::error_bound(double constant) const {
  return constant * std::sqrt(d * eps * beta);
}

GridSpec build_grid(int d, double eps, double L_jordan, double beta, const Vector& x0,
                    int qubit_budget) {
  require(d > 0, "dimension must be positive");
  require(eps > 0.0 && beta > 0.0 && L_jordan > 0.0, "eps, beta and L must be positive");
  require(x0.size() == d, "grid center has wrong dimension");

  const double tol = 1e-12;
  const double r = 24.0 * M_PI * std::sqrt(d * eps * beta) / L_jordan;
  // r <= 2^-b <= 2r  <=>  -log2(2r) <= b <= -log2(r)
  const double b_hi = -std::log2(r);
  const int b = static_cast<int>(std::floor(b_hi + tol));
  if (b < 1 || b < -std::log2(2.0 * r) - tol) {
    std::ostringstream os;
    os << "no grid size 2^b in [" << 1.0 / (2.0 * r) << ", " << 1.0 / r << "]";
    throw std::invalid_argument(os.str());
  }
  if (b > 62) throw std::invalid_argument("grid needs more than 62 bits per register");
  if (qubit_budget != kUnlimitedQubits && static_cast<long>(d) * b > qubit_budget) {
    throw std::invalid_argument("qubit budget exceeded: " + std::to_string(d * b) + " > " +
                                std::to_string(qubit_budget));
  }

  GridSpec g;
  g.d = d;
  g.l = 2.0 * std::sqrt(eps / (beta * d));
  g.bits_b = b;
  g.x0 = x0;
  g.L_jordan = L_jordan;
  g.beta = beta;
  g.eps = eps;

  // q/2 <= 2^-b0 <= q with q = N eps/(L l)
  const double q = g.N() * eps / (L_jordan * g.l);
  const int b0 = static_cast<int>(std::ceil(-std::log2(q) - tol));
  if (std::ldexp(1.0, -b0) < q / 2.0 * (1.0 - tol)) {
    throw std::invalid_argument("no phase precision 2^b0 satisfies the bracket");
  }
  g.bits_b0 = std::max(b0, 0);
  return g;
}

// ------------------------------------------------------------------ FFT

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("FFT size must be a power of 2");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = std::polar(1.0, ang * static_cast<double>(k));
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

// ----------------------------------------------------------- statevector

Statevector::Statevector(int d, int bits) : d_(d), bits_(bits) {
  require(d > 0 && bits > 0, "statevector needs d > 0 and bits > 0");
  require(static_cast<long>(d) * bits <= 30, "statevector too large to simulate");
  amp_.assign(std::size_t{1} << (d * bits), {0.0, 0.0});
  amp_[0] = 1.0;
}

double Statevector::norm() const {
  double s = 0.0;
  for (const auto& a : amp_) s += std::norm(a);
  return std::sqrt(s);
}

void Statevector::set_uniform() {
  const double a = 1.0 / std::sqrt(static_cast<double>(amp_.size()));
  std::fill(amp_.begin(), amp_.end(), std::complex<double>(a, 0.0));
}

void Statevector::inverse_qft(int axis) { shifted_dft(axis, true); }
void Statevector::forward_qft(int axis) { shifted_dft(axis, false); }

void Statevector::shifted_dft(int axis, bool inverse) {
  require(axis >= 0 && axis < d_, "register index out of range");
  const std::size_t N = axis_size();
  const std::size_t stride = std::size_t{1} << (axis * bits_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  // (m - N/2)(j - N/2) expands to mj plus (-1)^j, (-1)^m and the global (-1)^(N/2).
  const double global = ((N / 2) % 2 == 0) ? 1.0 : -1.0;
  std::vector<std::complex<double>> line(N);
  const std::size_t total = amp_.size();
  for (std::size_t base = 0; base < total; ++base) {
    if ((base / stride) % N != 0) continue;
    for (std::size_t j = 0; j < N; ++j) {
      line[j] = amp_[base + j * stride] * ((j & 1) ? -1.0 : 1.0);
    }
    fft_inplace(line, !inverse);
    for (std::size_t m = 0; m < N; ++m) {
      amp_[base + m * stride] = line[m] * (((m & 1) ? -1.0 : 1.0) * global * scale);
    }
  }
}

std::vector<std::uint64_t> Statevector::measure(Rng& rng) const {
  std::vector<double> cum(amp_.size());
  double s = 0.0;
  for (std::size_t i = 0; i < amp_.size(); ++i) {
    s += std::norm(amp_[i]);
    cum[i] = s;
  }
  const double u = rng.uniform() * s;
  std::size_t idx = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) -
                                             cum.begin());
  if (idx >= amp_.size()) idx = amp_.size() - 1;
  std::vector<std::uint64_t> out(d_);
  const std::size_t N = axis_size();
  for (int a = 0; a < d_; ++a) {
    out[a] = idx % N;
    idx /= N;
  }
  return out;
}

// ---------------------------------------------------------------- Jordan

namespace {

void check_norm(double n, const char* stage) {
  if (std::abs(n - 1.0) > 1e-9) {
    throw std::runtime_error(std::string("statevector norm drifted at ") + stage);
  }
}

}  // namespace

Vector jordan_gradient(const std::function<double(const Vector&)>& f, const GridSpec& spec,
                       Rng& rng, JordanTrace* trace) {
  require(spec.x0.size() == spec.d, "grid center has wrong dimension");
  Statevector sv(spec.d, spec.bits_b);
  const std::size_t N = sv.axis_size();
  const double Nd = static_cast<double>(N);
  const double N0 = spec.N0();
  const double f0 = f(spec.x0);
  const double scale = Nd / (2.0 * spec.L_jordan * spec.l);

  sv.set_uniform();
  const double n1 = sv.norm();
  check_norm(n1, "superposition");

  auto& amp = sv.amplitudes();
  Vector y(spec.d);
  for (std::size_t idx = 0; idx < amp.size(); ++idx) {
    std::size_t rem = idx;
    for (int a = 0; a < spec.d; ++a) {
      const double j = static_cast<double>(rem % N);
      rem /= N;
      y[a] = spec.x0[a] + (spec.l / Nd) * (j - Nd / 2.0);
    }
    const double F = scale * (f(y) - f0);
    const double ticks = std::nearbyint(F * N0);
    const double frac = std::fmod(ticks, N0) / N0;
    amp[idx] *= std::polar(1.0, 2.0 * M_PI * frac);
  }
  const double n2 = sv.norm();
  check_norm(n2, "phase");

  for (int a = 0; a < spec.d; ++a) sv.inverse_qft(a);
  const double n3 = sv.norm();
  check_norm(n3, "inverse QFT");

  const auto m = sv.measure(rng);
  Vector g(spec.d);
  std::vector<std::int64_t> ks(spec.d);
  for (int a = 0; a < spec.d; ++a) {
    ks[a] = static_cast<std::int64_t>(m[a]) - static_cast<std::int64_t>(N / 2);
    g[a] = (2.0 * spec.L_jordan / Nd) * static_cast<double>(ks[a]);
  }
  if (trace) {
    trace->norm_superposition = n1;
    trace->norm_phase = n2;
    trace->norm_qft = n3;
    trace->k = ks;
  }
  return g;
}

int median_repetitions(double M, double sigma_hat) {
  require(M > 0.0 && sigma_hat > 0.0, "M and sigma_hat must be positive");
  const double arg = 8.0 * M * M / (3.0 * sigma_hat * sigma_hat);
  if (arg <= 1.0) return 1;
  return std::max(1, static_cast<int>(std::ceil(std::sqrt(24.0 * std::log(arg)))));
}

int chernoff_median_repetitions(double M, double sigma_hat, double p) {
  require(M > 0.0 && sigma_hat > 0.0, "M and sigma_hat must be positive");
  require(p > 0.5 && p <= 1.0, "run success probability must lie in (1/2, 1]");
  const double arg = 8.0 * M * M / (3.0 * sigma_hat * sigma_hat);
  if (arg <= 1.0) return 1;
  const double gap = p - 0.5;
  return std::max(1, static_cast<int>(std::ceil(std::log(arg) / (2.0 * gap * gap))));
}

Vector robust_median_gradient(const std::function<Vector()>& run, int T, double M) {
  require(T >= 1, "T must be at least 1");
  require(M > 0.0, "M must be positive");
  std::vector<Vector> runs;
  runs.reserve(T);
  for (int t = 0; t < T; ++t) runs.push_back(run());
  const int d = static_cast<int>(runs[0].size());
  Vector med(d);
  std::vector<double> col(T);
  const int k = (T - 1) / 2;
  for (int i = 0; i < d; ++i) {
    for (int t = 0; t < T; ++t) col[t] = runs[t][i];
    std::nth_element(col.begin(), col.begin() + k, col.end());
    med[i] = col[k];
  }
  if (med.norm() > M) return Vector::Zero(d);
  return med;
}

}  // namespace qmcmc
