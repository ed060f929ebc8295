#include "qmcmc/gradest.hpp"
#include "qmcmc/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace qmcmc;

namespace {

ModelPtr linear_model(const Vector& g, double noise) {
  ModelConstants c;
  c.d = static_cast<int>(g.size());
  c.M = g.norm();
  c.L = 1.0;
  c.noise_amplitude = noise;
  c.noise_sigma = noise * g.norm() / std::sqrt(3.0);
  return std::make_shared<CustomModel>(
      c, [g](const Vector& x) { return g.dot(x); }, [g](const Vector&) { return g; });
}

ModelPtr fixed_constant_quadratic(int d, double sigma) {
  ModelConstants c;
  c.d = d;
  c.L = 1.0;
  c.mu = 1.0;
  c.M = 1.0;
  c.noise_sigma = sigma;
  return std::make_shared<CustomModel>(
      c, [](const Vector& x) { return 0.5 * x.squaredNorm(); }, [](const Vector& x) { return x; });
}

ModelPtr quadratic(int d) {
  QuadraticSpec q;
  q.d = d;
  q.n = 8;
  q.curvature_spread = 0.3;
  return make_finite_sum_quadratic(q);
}

struct Moments {
  Vector mean;
  Vector se;
  double mse = 0.0;
};

Moments moments(const std::vector<Vector>& xs, const Vector& truth) {
  const int d = static_cast<int>(truth.size());
  Moments m;
  m.mean = Vector::Zero(d);
  for (const auto& x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  Vector var = Vector::Zero(d);
  for (const auto& x : xs) {
    var += (x - m.mean).cwiseProduct(x - m.mean);
    m.mse += (x - truth).squaredNorm();
  }
  var /= static_cast<double>(xs.size() - 1);
  m.se = (var / static_cast<double>(xs.size())).cwiseSqrt();
  m.mse /= static_cast<double>(xs.size());
  return m;
}

void expect_unbiased(const Moments& m, const Vector& truth) {
  for (int j = 0; j < truth.size(); ++j) {
    EXPECT_LE(std::abs(m.mean(j) - truth(j)), 4.0 * m.se(j)) << "coordinate " << j;
  }
}

// Linear fit of log y against log x.
double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < x.size(); ++i) pts.emplace_back(x[i], y[i]);
  return slope_fit(pts).slope;
}

}  // namespace

TEST(GaussianSmoothing, UnbiasedForLinear) {
  Vector g(3);
  g << 1.0, -0.5, 2.0;
  auto m = linear_model(g, 0.5);
  QueryLedger l;
  Rng r(1);
  std::vector<Vector> out;
  for (int i = 0; i < 100000; ++i) out.push_back(gaussian_smoothing_gradient(*m, Vector::Ones(3), 0.3, 1, l, r).g);
  expect_unbiased(moments(out, g), g);
  EXPECT_EQ(l.totals().eval_c, 200000u);
}

TEST(GaussianSmoothing, MseBoundOnQuadratic) {
  for (int d : {1, 3}) {
    auto m = quadratic(d);
    const auto& c = m->constants();
    Rng r(2);
    const Vector x = *c.x_star + Vector::Constant(d, 0.5);
    const Vector grad = m->gradient(x);
    for (int b : {1, 8}) {
      for (double nu : {0.01, 0.2}) {
        QueryLedger l;
        std::vector<Vector> out;
        for (int i = 0; i < 20000; ++i) out.push_back(gaussian_smoothing_gradient(*m, x, nu, b, l, r).g);
        const double bound = 4.0 * (d + 5) * (grad.squaredNorm() + c.noise_sigma * c.noise_sigma) / b +
                             1.5 * nu * nu * c.L * c.L * std::pow(d + 3.0, 3);
        EXPECT_LE(moments(out, grad).mse, 1.2 * bound) << "d=" << d << " b=" << b;
      }
    }
  }
}

TEST(GaussianSmoothing, QuadrupleBatchQuartersMse) {
  auto m = quadratic(2);
  const Vector x = *m->constants().x_star;
  const Vector zero = Vector::Zero(2);
  Rng r(3);
  QueryLedger l;
  auto mse = [&](int b) {
    std::vector<Vector> out;
    for (int i = 0; i < 40000; ++i) out.push_back(gaussian_smoothing_gradient(*m, x, 0.5, b, l, r).g);
    return moments(out, zero).mse;
  };
  const double ratio = mse(2) / mse(8);
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.5);
}

TEST(GaussianSmoothing, Errors) {
  auto m = quadratic(2);
  QueryLedger l;
  Rng r(1);
  EXPECT_THROW(gaussian_smoothing_gradient(*m, Vector::Zero(2), 0.0, 1, l, r), std::invalid_argument);
  EXPECT_THROW(gaussian_smoothing_gradient(*m, Vector::Zero(2), 0.1, 0, l, r), std::invalid_argument);
}

TEST(Mlmc, ProbabilitiesSumToOne) {
  for (int jm : {1, 2, 10, 40}) {
    double s = 0.0;
    for (int j = 1; j <= jm; ++j) s += mlmc_level_probability(j, jm);
    EXPECT_NEAR(s, 1.0, 1e-15);
    EXPECT_EQ(mlmc_level_probability(0, jm), 0.0);
    EXPECT_EQ(mlmc_level_probability(jm + 1, jm), 0.0);
  }
}

TEST(Mlmc, DrawFrequencies) {
  Rng r(4);
  std::array<int, 6> c{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const int j = mlmc_draw_level(r, 40);
    if (j <= 5) ++c[j];
  }
  for (int j = 1; j <= 5; ++j) EXPECT_NEAR(c[j] / double(n), std::exp2(-j), 0.01);
  for (int i = 0; i < 1000; ++i) EXPECT_LE(mlmc_draw_level(r, 3), 3);
}

TEST(Mlmc, DeterministicInnerReturnsG0) {
  Vector g(2);
  g << 0.3, -1.1;
  Rng r(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(mlmc_unbiased([&](double, Rng&) { return g; }, 0.5, r), g);
}

TEST(Mlmc, TelescopingWithExactLevelMeans) {
  const int jm = 40;
  const double sigma_hat = 2.0;
  Vector g(2), c(2);
  g << 1.0, 2.0;
  c << 3.0, -4.0;
  auto mean_at = [&](int j) -> Vector { return g + mlmc_level_target(j, sigma_hat) * c; };
  Vector total = Vector::Zero(2);
  for (int j = 1; j <= jm; ++j)
    total += mlmc_level_probability(j, jm) * mlmc_combine(mean_at(0), mean_at(j), mean_at(j - 1), j, jm);
  EXPECT_LE((total - mean_at(jm)).norm(), 1e-12);
}

TEST(Mlmc, UnbiasedWithBoundedSecondMoment) {
  const int d = 2;
  Vector g(d), u(d);
  g << 0.5, -0.25;
  u = Vector::Ones(d).normalized();
  const double sigma_hat = 0.4;
  // MSE of each level is s^2 / 2: bias s/2 along u plus noise of variance s^2/4.
  BiasedEstimator est = [&](double s, Rng& r) -> Vector {
    return g + 0.5 * s * u + 0.5 * s / std::sqrt(static_cast<double>(d)) * r.normal_vector(d);
  };
  Rng r(6);
  std::vector<Vector> out;
  for (int i = 0; i < 100000; ++i) out.push_back(mlmc_unbiased(est, sigma_hat, r));
  const auto m = moments(out, g);
  expect_unbiased(m, g);
  EXPECT_LE(m.mse, 1.1 * sigma_hat * sigma_hat);
}

TEST(PhasePipeline, LooseTargetIsOneSample) {
  auto m = quadratic(2);
  const double sigma = m->constants().noise_sigma;
  const Vector x = Vector::Constant(2, 0.7);
  QueryLedger l;
  Rng r(7);
  PipelineOptions o;
  o.log_factor = 1.0;
  const auto est = phase_pipeline_gradient(*m, x, 2.0 * sigma, l, r, o);
  EXPECT_EQ(est.bias, BiasFlag::Unbiased);
  EXPECT_EQ(l.totals().eval_q, 1u);
  EXPECT_EQ(l.totals().eval_c, 0u);
  // One noisy realization of the exact gradient.
  const Vector g = m->gradient(x);
  const double ratio = est.g.dot(g) / g.squaredNorm();
  EXPECT_LE((est.g - ratio * g).norm(), 1e-12);
  EXPECT_LE(std::abs(ratio - 1.0), m->constants().noise_amplitude + 1e-12);
}

TEST(PhasePipeline, UnbiasedWithVarianceContract) {
  auto m = quadratic(2);
  const Vector x = Vector::Constant(2, -0.4);
  const Vector g = m->gradient(x);
  const double sigma_hat = 1.0;
  ASSERT_LT(sigma_hat, m->constants().noise_sigma);
  QueryLedger l;
  Rng r(8);
  std::vector<Vector> out;
  for (int i = 0; i < 10000; ++i) out.push_back(phase_pipeline_gradient(*m, x, sigma_hat, l, r).g);
  const auto mo = moments(out, g);
  expect_unbiased(mo, g);
  EXPECT_LE(mo.mse, 1.1 * sigma_hat * sigma_hat);
  EXPECT_GT(l.totals().eval_q, 0u);
  EXPECT_EQ(l.totals().grad_c + l.totals().grad_q + l.totals().eval_c, 0u);
}

TEST(PhasePipeline, StatevectorRunsInsideBudget) {
  auto m = fixed_constant_quadratic(1, 1.0);
  PipelineOptions o;
  o.mode = JordanMode::Statevector;
  PhasePipeline p(*m, o, 3);
  const auto& plan = p.plan(0.5);
  EXPECT_TRUE(plan.statevector);
  EXPECT_LE(plan.grid.bits_b, o.qubit_budget);
  QueryLedger l;
  Rng r(9);
  const Vector x = Vector::Constant(1, 0.3);
  int close = 0;
  for (int i = 0; i < 50; ++i) close += (p.biased(x, 0.5, l, r) - x).norm() <= 0.5;
  EXPECT_GE(close, 40);
}

TEST(PhasePipeline, ChargeScalesWithSigmaDOverSigmaHat) {
  PipelineOptions o;
  o.log_factor = 1.0;
  const double sigma = 1.0;
  std::vector<double> inv_s, charge;
  auto m2 = fixed_constant_quadratic(2, sigma);
  PhasePipeline p2(*m2, o, 1);
  for (int k = 0; k < 8; ++k) {
    const double s = 0.1 * std::exp2(-k);
    inv_s.push_back(1.0 / s);
    charge.push_back(static_cast<double>(p2.plan(s).charge));
  }
  const double slope_s = log_slope(inv_s, charge);
  EXPECT_GT(slope_s, 0.85);
  EXPECT_LT(slope_s, 1.25);

  std::vector<double> ds, charge_d;
  for (int d : {1, 2, 4, 8, 16, 32, 64}) {
    auto m = fixed_constant_quadratic(d, sigma);
    PhasePipeline p(*m, o, 1);
    ds.push_back(d);
    charge_d.push_back(static_cast<double>(p.plan(0.01).charge));
  }
  const double slope_d = log_slope(ds, charge_d);
  EXPECT_GT(slope_d, 0.85);
  EXPECT_LT(slope_d, 1.25);

  std::vector<double> sig, charge_sig;
  for (double sg : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    auto m = fixed_constant_quadratic(2, sg);
    PhasePipeline p(*m, o, 1);
    sig.push_back(sg);
    charge_sig.push_back(static_cast<double>(p.plan(0.01).charge));
  }
  const double slope_sig = log_slope(sig, charge_sig);
  EXPECT_GT(slope_sig, 0.9);
  EXPECT_LT(slope_sig, 1.1);
}

TEST(PhasePipeline, OneDimensionalMedianMatchesExplicitRuns) {
  // The d = 1 contract median is drawn from its order-statistic law; compare it with the
  // median of T explicit runs by a two-sample KS test and by mean ledger charge.
  for (bool chernoff : {true, false}) {
    auto m = fixed_constant_quadratic(1, 1.0);
    PipelineOptions o;
    o.chernoff_repetitions = chernoff;
    PhasePipeline fast(*m, o, 3), slow(*m, o, 4);
    const double s = 0.4;
    const Vector x = Vector::Constant(1, 0.3);
    const int T = fast.plan(s).T;
    QueryLedger lf, ls;
    Rng rf(1), rs(2);
    const int n = 4000;
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(fast.biased(x, s, lf, rf)(0));
      b.push_back(robust_median_gradient([&]() { return slow.single_run(x, s, ls, rs); }, T,
                                         m->constants().M)(0));
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double ks = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] <= b[j]) ++i; else ++j;
      ks = std::max(ks, std::abs(static_cast<double>(i) - static_cast<double>(j)) / n);
    }
    // Two-sample KS critical value at level 0.001.
    EXPECT_LT(ks, 1.95 * std::sqrt(2.0 / n)) << "chernoff=" << chernoff << " T=" << T;
    const double qa = static_cast<double>(lf.totals().eval_q), qb = static_cast<double>(ls.totals().eval_q);
    EXPECT_NEAR(qa / qb, 1.0, 0.01);
  }
}

TEST(PhasePipeline, DeterministicLedger) {
  auto m = quadratic(2);
  const Vector x = Vector::Constant(2, 0.1);
  auto once = [&](std::uint64_t seed) {
    QueryLedger l;
    Rng r(seed);
    const Vector g = phase_pipeline_gradient(*m, x, 0.8, l, r).g;
    return std::make_pair(g, l);
  };
  const auto a = once(11), b = once(11);
  EXPECT_EQ(a.first, b.first);
  EXPECT_TRUE(a.second == b.second);
}

TEST(PhasePipeline, Errors) {
  auto m = quadratic(2);
  QueryLedger l;
  Rng r(1);
  EXPECT_THROW(phase_pipeline_gradient(*m, Vector::Zero(2), 0.0, l, r), std::invalid_argument);
  ModelConstants c;
  c.d = 1;
  c.L = 0.0;
  CustomModel bad(c, [](const Vector&) { return 0.0; }, [](const Vector& x) { return Vector(Vector::Zero(x.size())); });
  EXPECT_THROW(PhasePipeline(bad, {}, 1), std::invalid_argument);
}

TEST(RobustGrad, ParamsAndMonotoneD) {
  const auto p = robust_grad_params(2, 3.0, 1.5, 10.0, 0.5);
  EXPECT_NEAR(p.beta, 164.0 * 3.0 * 2.25 / 0.25, 1e-9);
  EXPECT_NEAR(p.D, 40.0 * 2.25 / 0.5, 1e-12);
  EXPECT_NEAR(p.eps_prime, 0.25 / (p.beta * p.beta * 8.0 * 12000.0 * 12000.0), 1e-30);
  double prev = std::numeric_limits<double>::infinity();
  for (double e = 0.01; e < 2.0; e *= 1.5) {
    const auto q = robust_grad_params(2, 3.0, 1.5, 10.0, e);
    EXPECT_GT(q.beta, 0);
    EXPECT_GT(q.eps_prime, 0);
    EXPECT_LT(q.D, prev);
    prev = q.D;
  }
}

TEST(RobustGrad, IdenticalComponentsNeverClip) {
  Vector g(3);
  g << 1.0, 2.0, -1.0;
  ComponentJordan src;
  src.run = [g](std::uint64_t, const Vector&, Rng&) { return g; };
  const StochasticProblem prob{3, 1.0, 1.0, 10.0};
  QueryLedger l;
  Rng r(1);
  const auto res = quantum_stochastic_gradient(src, prob, Vector::Zero(3), 0.5, l, r);
  EXPECT_LE((res.v - g).norm(), 1e-12);
  EXPECT_EQ(res.clipped, 0u);
}

TEST(RobustGrad, ClippingRemovesAdversarialOutliers) {
  const int d = 2;
  const double sigma = 1.0, eps = 0.5;
  Vector g(d);
  g << 0.4, -0.3;
  // 5% of components carry +100 e1; the rest are grad + N(0, sigma^2/d I).
  ComponentJordan src;
  src.run = [&](std::uint64_t xi, const Vector&, Rng& r) -> Vector {
    Vector v = g + sigma / std::sqrt(static_cast<double>(d)) * r.normal_vector(d);
    if (hash_uniform(xi) < 0.05) v(0) += 100.0;
    return v;
  };
  const StochasticProblem prob{d, 1.0, sigma, 200.0};
  RobustGradOptions o;
  o.anchor = AnchorPolicy::RedrawWhenDetectable;
  ASSERT_LT(robust_grad_params(d, 1.0, sigma, 200.0, eps).D, 100.0);
  Rng r(2);
  for (int t = 0; t < 10; ++t) {
    QueryLedger l;
    const auto res = quantum_stochastic_gradient(src, prob, Vector::Zero(d), eps, l, r, o, &g);
    EXPECT_LE((res.v - g).norm(), eps);
    EXPECT_GT(res.clipped, 0u);
  }
}

TEST(RobustGrad, ClippingBetweenInlierAndOutlierRadiiBeatsExtremes) {
  // The expected clipped mean is not monotone in D: once D reaches the outliers they
  // re-enter. A threshold between the two radii beats both D = 0 and D = infinity.
  const int d = 2;
  Vector g(d), s(d);
  g << 0.0, 0.0;
  s << 0.8, 0.0;
  Rng r(3);
  const int n = 200000;
  std::vector<Vector> pool;
  pool.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vector v = g + 0.5 * r.normal_vector(d);
    if (r.uniform() < 0.05) v(0) += 100.0;
    pool.push_back(v);
  }
  auto dist = [&](double D) {
    Vector mean = Vector::Zero(d);
    for (const auto& v : pool) mean += ((v - s).norm() <= D) ? v : s;
    return (mean / n - g).norm();
  };
  const double mid = dist(20.0);
  EXPECT_LT(mid, dist(0.0));
  EXPECT_LT(mid, dist(std::numeric_limits<double>::infinity()));
  EXPECT_LT(dist(0.5), dist(0.0));
}

TEST(RobustGrad, ChargeInverseInEps) {
  const int d = 2;
  ComponentJordan src;
  src.run = [](std::uint64_t, const Vector&, Rng& r) { return Vector(r.normal_vector(2)); };
  const StochasticProblem prob{d, 1.0, 1.0, 5.0};
  RobustGradOptions o;
  o.log_factor = 1.0;
  std::vector<double> inv, charge;
  for (double eps : {0.8, 0.4, 0.2, 0.1}) {
    QueryLedger l;
    Rng r(4);
    quantum_stochastic_gradient(src, prob, Vector::Zero(d), eps, l, r, o);
    inv.push_back(1.0 / eps);
    charge.push_back(static_cast<double>(l.totals().eval_q));
  }
  const double slope = log_slope(inv, charge);
  EXPECT_GT(slope, 0.9);
  EXPECT_LT(slope, 1.1);
  EXPECT_NEAR(charge[3] / charge[2], 2.0, 0.1);
}

TEST(RobustGrad, ModelSourceMeetsAccuracyOnQuadratic) {
  auto m = quadratic(2);
  const Vector x = Vector::Constant(2, 0.2);
  const double eps = m->constants().noise_sigma / 2.0;
  RobustGradOptions o;
  o.anchor = AnchorPolicy::RedrawWhenDetectable;
  QueryLedger l;
  Rng r(5);
  int ok = 0;
  for (int t = 0; t < 20; ++t) ok += (quantum_stochastic_gradient(*m, x, eps, l, r, o).v - m->gradient(x)).norm() <= eps;
  EXPECT_GE(ok, 19);
}

TEST(RobustGrad, Errors) {
  ComponentJordan src;
  src.run = [](std::uint64_t, const Vector& x, Rng&) { return x; };
  QueryLedger l;
  Rng r(1);
  EXPECT_THROW(quantum_stochastic_gradient(src, {1, 1.0, 1.0, 1.0}, Vector::Zero(1), 0.0, l, r),
               std::invalid_argument);
  EXPECT_THROW(quantum_stochastic_gradient(src, {1, 1.0, 0.1, 1.0}, Vector::Zero(1), 0.5, l, r),
               std::invalid_argument);
}
