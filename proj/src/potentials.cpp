#include "qmcmc/potentials.hpp"

#include "qmcmc/ledger.hpp"
#include "qmcmc/rng.hpp"

#include <algorithm>
#include <cmath>

namespace qmcmc {

namespace {

double log_cosh(double z) {
  const double a = std::abs(z);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

double sign0(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

void PotentialModel::check_dim(const Vector& x) const {
  if (x.size() != c_.d) {
    throw std::invalid_argument("dimension mismatch: expected " + std::to_string(c_.d) +
                                ", got " + std::to_string(x.size()));
  }
}

double PotentialModel::component_value(int i, const Vector& x) const {
  require(i >= 0 && i < c_.n, "component index out of range");
  return value(x);
}

Vector PotentialModel::component_gradient(int i, const Vector& x) const {
  require(i >= 0 && i < c_.n, "component index out of range");
  return gradient(x);
}

double PotentialModel::noise_factor(std::uint64_t seed) const {
  return 1.0 + c_.noise_amplitude * (2.0 * hash_uniform(seed) - 1.0);
}

std::string PotentialModel::kind_name() const {
  switch (kind_) {
    case ModelKind::FiniteSumQuadratic: return "finite_sum_quadratic";
    case ModelKind::GaussianMixture: return "gaussian_mixture";
    case ModelKind::PerturbedStronglyConvex: return "perturbed_strongly_convex";
    case ModelKind::Custom: return "custom";
  }
  return "unknown";
}

// ---------------------------------------------------------------- quadratic

FiniteSumQuadratic::FiniteSumQuadratic(std::vector<Vector> centers, std::vector<Vector> curvatures,
                                       double noise_amplitude, double domain_scale)
    : PotentialModel(ModelKind::FiniteSumQuadratic, {}),
      centers_(std::move(centers)),
      curv_(std::move(curvatures)) {
  require(!centers_.empty(), "finite-sum quadratic needs at least one center");
  const int d = static_cast<int>(centers_[0].size());
  require(d > 0, "dimension must be positive");
  if (curv_.empty()) curv_.assign(centers_.size(), Vector::Ones(d));
  require(curv_.size() == centers_.size(), "curvature count must match center count");
  require(noise_amplitude >= 0.0 && noise_amplitude < 1.0, "noise amplitude must lie in [0, 1)");

  const double n = static_cast<double>(centers_.size());
  mean_curv_ = Vector::Zero(d);
  mean_weighted_center_ = Vector::Zero(d);
  double L = 0.0;
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    require(centers_[i].size() == d && curv_[i].size() == d, "inconsistent component dimension");
    require(curv_[i].minCoeff() > 0.0, "curvatures must be positive");
    mean_curv_ += curv_[i] / n;
    mean_weighted_center_ += curv_[i].cwiseProduct(centers_[i]) / n;
    L = std::max(L, curv_[i].maxCoeff());
  }
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    offset_ += 0.5 * curv_[i].dot(centers_[i].cwiseProduct(centers_[i])) / n;
  }

  auto& c = mutable_constants();
  c.d = d;
  c.n = static_cast<int>(centers_.size());
  c.L = L;
  c.mu = mean_curv_.minCoeff();
  c.lsi_alpha = c.mu;
  c.x_star = mean_weighted_center_.cwiseQuotient(mean_curv_);
  c.domain_radius = domain_scale * std::sqrt(d / c.mu);
  c.M = mean_curv_.maxCoeff() * c.domain_radius;
  c.noise_amplitude = noise_amplitude;
  c.noise_sigma = noise_amplitude * c.M / std::sqrt(3.0);
}

double FiniteSumQuadratic::value(const Vector& x) const {
  check_dim(x);
  return 0.5 * mean_curv_.dot(x.cwiseProduct(x)) - mean_weighted_center_.dot(x) + offset_;
}

Vector FiniteSumQuadratic::gradient(const Vector& x) const {
  check_dim(x);
  return mean_curv_.cwiseProduct(x) - mean_weighted_center_;
}

double FiniteSumQuadratic::component_value(int i, const Vector& x) const {
  require(i >= 0 && i < components(), "component index out of range");
  check_dim(x);
  const Vector r = x - centers_[i];
  return 0.5 * curv_[i].dot(r.cwiseProduct(r));
}

Vector FiniteSumQuadratic::component_gradient(int i, const Vector& x) const {
  require(i >= 0 && i < components(), "component index out of range");
  check_dim(x);
  return curv_[i].cwiseProduct(x - centers_[i]);
}

std::optional<std::pair<Vector, Matrix>> FiniteSumQuadratic::gaussian_target() const {
  Matrix cov = mean_curv_.cwiseInverse().asDiagonal();
  return std::make_pair(*constants().x_star, cov);
}

ModelPtr make_finite_sum_quadratic(const QuadraticSpec& spec) {
  require(spec.d > 0 && spec.n > 0, "d and n must be positive");
  require(spec.curvature_spread >= 0.0 && spec.curvature_spread < 1.0,
          "curvature spread must lie in [0, 1)");
  Rng rng = Rng(spec.seed).split(Stream::Model);
  std::vector<Vector> centers, curv;
  for (int i = 0; i < spec.n; ++i) {
    centers.push_back(spec.center_radius * rng.unit_sphere(spec.d));
    Vector a = Vector::Ones(spec.d);
    if (spec.curvature_spread > 0.0) {
      for (int j = 0; j < spec.d; ++j) a[j] += spec.curvature_spread * (2.0 * rng.uniform() - 1.0);
    }
    curv.push_back(a);
  }
  return std::make_shared<FiniteSumQuadratic>(std::move(centers), std::move(curv),
                                              spec.noise_amplitude, spec.domain_scale);
}

// ------------------------------------------------------------------ mixture

double mixture_lsi_lower_bound(double m, double s) {
  const double s2 = s * s;
  auto f = [&](double x) { return x * x / (2 * s2) - log_cosh(m * x / s2); };
  auto df = [&](double x) { return x / s2 - (m / s2) * std::tanh(m * x / s2); };
  auto d2f = [&](double x) {
    const double c = 1.0 / std::cosh(m * x / s2);
    return 1.0 / s2 - (m * m / (s2 * s2)) * c * c;
  };
  if (m * m <= s2) return 1.0 / s2 - m * m / (s2 * s2);  // already strongly convex

  // Comparison F equals f outside [-a, a] and is the C1-matching quadratic inside.
  double best = 0.0;
  const double a_hi = 6.0 * std::max(m, s);
  const int grid = 400;
  for (int ia = 1; ia <= grid; ++ia) {
    const double a = a_hi * ia / grid;
    const double slope = df(a);
    if (slope <= 0.0) continue;
    const double kappa = slope / a;
    const double rho = std::min(kappa, d2f(a));
    if (rho <= 0.0) continue;
    double hi = 0.0, lo = 0.0;
    const int inner = 2000;
    for (int k = 0; k <= inner; ++k) {
      const double x = a * k / inner;
      const double diff = f(x) - (f(a) + 0.5 * kappa * (x * x - a * a));
      hi = std::max(hi, diff);
      lo = std::min(lo, diff);
    }
    best = std::max(best, rho * std::exp(-(hi - lo)));
  }
  return best;
}

GaussianMixture::GaussianMixture(int d, double separation, double scale, double noise_amplitude,
                                 double domain_radius)
    : PotentialModel(ModelKind::GaussianMixture, {}), d_(d), m_(separation), s_(scale) {
  require(d == 1 || d == 2, "mixture model supports d = 1 or d = 2");
  require(scale > 0.0 && separation >= 0.0, "invalid mixture parameters");
  require(noise_amplitude >= 0.0 && noise_amplitude < 1.0, "noise amplitude must lie in [0, 1)");
  require(domain_radius > 0.0, "domain radius must be positive");
  const double s2 = s_ * s_;
  auto& c = mutable_constants();
  c.d = d;
  c.n = 1;
  c.L = std::max(1.0 / s2, m_ * m_ / (s2 * s2) - 1.0 / s2);
  c.mu = (m_ * m_ < s2) ? 1.0 / s2 - m_ * m_ / (s2 * s2) : 0.0;
  c.lsi_alpha = std::min(mixture_lsi_lower_bound(m_, s_), 1.0 / s2);
  c.domain_radius = domain_radius;
  c.M = (domain_radius + m_) / s2;
  c.noise_amplitude = noise_amplitude;
  c.noise_sigma = noise_amplitude * c.M / std::sqrt(3.0);

  // Positive mode: root of x = m tanh(m x / s^2), by bisection.
  double root = 0.0;
  if (m_ * m_ > s2) {
    double lo = 1e-12, hi = m_ + s_;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid - m_ * std::tanh(m_ * mid / s2) < 0.0) lo = mid; else hi = mid;
    }
    root = 0.5 * (lo + hi);
  }
  Vector xs = Vector::Zero(d);
  xs[0] = root;
  c.x_star = xs;
}

double GaussianMixture::value(const Vector& x) const {
  check_dim(x);
  const double s2 = s_ * s_;
  return x.squaredNorm() / (2 * s2) + m_ * m_ / (2 * s2) - log_cosh(m_ * x[0] / s2) +
         0.5 * d_ * std::log(2 * M_PI * s2);
}

Vector GaussianMixture::gradient(const Vector& x) const {
  check_dim(x);
  const double s2 = s_ * s_;
  Vector g = x / s2;
  g[0] -= (m_ / s2) * std::tanh(m_ * x[0] / s2);
  return g;
}

double GaussianMixture::density(const Vector& x) const { return std::exp(-value(x)); }

double GaussianMixture::first_coordinate_cdf(double t) const {
  auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  return 0.5 * phi((t + m_) / s_) + 0.5 * phi((t - m_) / s_);
}

ModelPtr make_gaussian_mixture(int d, double separation, double scale, double noise_amplitude,
                               double domain_radius) {
  return std::make_shared<GaussianMixture>(d, separation, scale, noise_amplitude, domain_radius);
}

// ---------------------------------------------------------------- perturbed

PerturbedStronglyConvex::PerturbedStronglyConvex(Vector center, double mu, double amplitude,
                                                 double frequency, double noise_amplitude,
                                                 double domain_radius)
    : PotentialModel(ModelKind::PerturbedStronglyConvex, {}),
      center_(std::move(center)),
      mu_F_(mu),
      amp_(amplitude),
      freq_(frequency) {
  const int d = static_cast<int>(center_.size());
  require(d > 0, "dimension must be positive");
  require(mu > 0.0, "convex part needs mu > 0");
  require(amplitude >= 0.0 && frequency >= 0.0, "perturbation must be nonnegative");
  require(noise_amplitude >= 0.0 && noise_amplitude < 1.0, "noise amplitude must lie in [0, 1)");
  auto& c = mutable_constants();
  c.d = d;
  c.n = 1;
  c.L = mu + amplitude * frequency * frequency * d;
  c.mu = (amplitude == 0.0) ? mu : 0.0;
  // Holley-Stroock against F: osc(f - F) <= 2A.
  c.lsi_alpha = mu * std::exp(-2.0 * amplitude);
  c.domain_radius = domain_radius > 0.0 ? domain_radius : 10.0 * std::sqrt(d / mu);
  c.M = mu * c.domain_radius + amplitude * frequency * std::sqrt(static_cast<double>(d));
  c.noise_amplitude = noise_amplitude;
  c.noise_sigma = noise_amplitude * c.M / std::sqrt(3.0);
  if (amplitude == 0.0) c.x_star = center_;
}

double PerturbedStronglyConvex::convex_part(const Vector& x) const {
  check_dim(x);
  return 0.5 * mu_F_ * (x - center_).squaredNorm();
}

double PerturbedStronglyConvex::value(const Vector& x) const {
  return convex_part(x) + amp_ * std::sin(freq_ * x.lpNorm<1>());
}

Vector PerturbedStronglyConvex::gradient(const Vector& x) const {
  check_dim(x);
  Vector g = mu_F_ * (x - center_);
  const double c = amp_ * freq_ * std::cos(freq_ * x.lpNorm<1>());
  for (int i = 0; i < x.size(); ++i) g[i] += c * sign0(x[i]);
  return g;
}

ModelPtr make_perturbed_strongly_convex(int d, double mu, double amplitude, double frequency,
                                        double noise_amplitude, double domain_radius) {
  return std::make_shared<PerturbedStronglyConvex>(Vector::Zero(d), mu, amplitude, frequency,
                                                   noise_amplitude, domain_radius);
}

// ------------------------------------------------------------------- custom

CustomModel::CustomModel(ModelConstants c, std::function<double(const Vector&)> f,
                         std::function<Vector(const Vector&)> grad)
    : PotentialModel(ModelKind::Custom, std::move(c)), f_(std::move(f)), grad_(std::move(grad)) {
  require(f_ && grad_, "custom model needs value and gradient functions");
  require(constants().d > 0 && constants().n == 1, "custom models are single-component");
}

double CustomModel::value(const Vector& x) const {
  check_dim(x);
  return f_(x);
}

Vector CustomModel::gradient(const Vector& x) const {
  check_dim(x);
  return grad_(x);
}

// --------------------------------------------------------------- oracles

double eval_exact(const PotentialModel& model, const Vector& x) { return model.value(x); }

Vector grad_exact(const PotentialModel& model, const Vector& x) { return model.gradient(x); }

Vector grad_component(const PotentialModel& model, int i, const Vector& x, QueryLedger* ledger) {
  Vector g = model.component_gradient(i, x);
  if (ledger) ledger->charge_grad_classical(1);
  return g;
}

double stochastic_eval(const PotentialModel& model, const Vector& x, StochasticSeed xi,
                       QueryLedger* ledger) {
  const double v = model.noise_factor(xi.seed) * model.value(x);
  if (ledger) ledger->charge_eval_classical(1);
  return v;
}

Vector stochastic_gradient(const PotentialModel& model, const Vector& x, StochasticSeed xi) {
  return model.noise_factor(xi.seed) * model.gradient(x);
}

Vector smoothed_grad_sample(const PotentialModel& model, const Vector& x, double v,
                            StochasticSeed xi, QueryLedger* ledger) {
  require(v > 0.0, "smoothing radius must be positive");
  const int d = model.dim();
  const Vector w = hash_unit_sphere(
      derive_seed(xi.seed, static_cast<std::uint64_t>(SeedPurpose::SmoothingDirection)), d);
  const StochasticSeed noise{xi.seed, SeedPurpose::NoiseRealization};
  const double fp = stochastic_eval(model, x + v * w, noise, ledger);
  const double fm = stochastic_eval(model, x - v * w, noise, ledger);
  return (d / (2.0 * v)) * (fp - fm) * w;
}

}  // namespace qmcmc
