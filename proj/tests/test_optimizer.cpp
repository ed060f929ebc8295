#include "qmcmc/optimizer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace qmcmc;

namespace {

OptimizeConfig tuned() {
  OptimizeConfig c;
  c.eta = 2e-4;
  c.steps = 15000;
  c.sigma_hat_sq = 100.0;
  return c;
}

}  // namespace

TEST(OptimizerPlan, Identities) {
  auto m = make_perturbed_strongly_convex(2, 1.0, 0.05, 50.0);
  OptimizeConfig c;
  const auto p = plan_optimizer(*m, c);
  const double d = 2.0;
  EXPECT_DOUBLE_EQ(p.beta, c.beta_constant * d / c.eps);
  EXPECT_DOUBLE_EQ(p.M, m->constants().M);
  EXPECT_NEAR(p.v, c.eps / (std::max(p.M, 1.0) * d), 1e-15);
  EXPECT_NEAR(p.L, p.beta * p.M * std::sqrt(d) / p.v, 1e-9 * p.L);
  EXPECT_NEAR(p.alpha, 0.5 * p.beta * 1.0 * std::exp(-3.0 * p.beta * c.eps / d), 1e-15);
  EXPECT_NEAR(p.kl_target, 0.02, 1e-15);
  EXPECT_EQ(p.eta, p.theory_eta);
  EXPECT_EQ(p.steps, p.theory_steps);
  EXPECT_NEAR(p.theory_sigma_hat_sq, p.alpha * p.kl_target, 1e-15);
  const auto j = p.to_json();
  EXPECT_TRUE(j.contains("theory_steps"));
}

TEST(OptimizerPlan, OverridesAndErrors) {
  auto m = make_perturbed_strongly_convex(2, 1.0, 0.05, 50.0);
  auto c = tuned();
  c.beta_temp = 7.0;
  const auto p = plan_optimizer(*m, c);
  EXPECT_EQ(p.beta, 7.0);
  EXPECT_EQ(p.steps, 15000);
  EXPECT_EQ(p.eta, 2e-4);

  OptimizeConfig bad;
  bad.smoothing_v = 10.0 * bad.eps / (m->constants().M * 2.0);
  EXPECT_THROW(plan_optimizer(*m, bad), std::invalid_argument);
  bad.allow_v_violation = true;
  EXPECT_NO_THROW(plan_optimizer(*m, bad));

  OptimizeConfig zero;
  zero.eps = 0.0;
  EXPECT_THROW(plan_optimizer(*m, zero), std::invalid_argument);
  auto mix = make_gaussian_mixture(2);
  EXPECT_THROW(plan_optimizer(*mix, OptimizeConfig{}), std::invalid_argument);
}

TEST(GridSearch, FindsQuadraticMinimum) {
  Vector c(2);
  c << 0.3, -0.2;
  PerturbedStronglyConvex m(c, 1.0, 0.0, 0.0, 0.5, 0.0);
  const auto g = grid_search_minimum(m, c + Vector::Constant(2, 0.1), 1.0, 101);
  EXPECT_LE((g.x - c).norm(), 1e-6);
  EXPECT_NEAR(g.f, 0.0, 1e-10);
}

TEST(GridSearch, PerturbedMinimumBelowConvexBound) {
  auto m = make_perturbed_strongly_convex(2, 1.0, 0.05, 50.0);
  const auto g = grid_search_minimum(*m, Vector::Zero(2), std::sqrt(0.2) + 0.05, 801);
  // For fixed r = |x|_1 the Euclidean norm is smallest on the diagonal, so
  // min f = min_r r^2/4 + 0.05 sin(50 r), found by a fine 1-D scan.
  double oracle = 0.0;
  for (int i = 0; i <= 2000000; ++i) {
    const double r = 1e-6 * i;
    oracle = std::min(oracle, 0.25 * r * r + 0.05 * std::sin(50.0 * r));
  }
  EXPECT_NEAR(g.f, oracle, 1e-8);
  EXPECT_GE(g.f, -0.05);
}

TEST(Optimizer, ZeroPerturbationSucceeds) {
  auto m = make_perturbed_strongly_convex(2, 1.0, 0.0, 50.0);
  QueryLedger l;
  Rng r(1);
  const auto res = approx_convex_minimize(*m, tuned(), l, r);
  EXPECT_GE(res.report.success_rate, 0.9);
  ASSERT_TRUE(res.gap.has_value());
  EXPECT_LE(*res.gap, 0.2);
  EXPECT_EQ(res.report.chain_x.size(), 10u);
  EXPECT_GT(l.totals().eval_q, 0u);
  EXPECT_EQ(l.totals().grad_c + l.totals().grad_q, 0u);
}

TEST(Optimizer, DeterministicUnderWorkers) {
  auto m = make_perturbed_strongly_convex(1, 1.0, 0.05, 50.0);
  auto c = tuned();
  c.steps = 500;
  c.repeat_count = 4;
  QueryLedger la, lb;
  Rng ra(3), rb(3);
  const auto a = approx_convex_minimize(*m, c, la, ra);
  c.workers = 3;
  const auto b = approx_convex_minimize(*m, c, lb, rb);
  EXPECT_EQ(a.report.chain_f, b.report.chain_f);
  EXPECT_TRUE(la == lb);
}

TEST(Optimizer, UnknownMinimumGivesNanRate) {
  auto m = make_perturbed_strongly_convex(4, 1.0, 0.05, 5.0);
  auto c = tuned();
  c.steps = 10;
  c.repeat_count = 2;
  QueryLedger l;
  Rng r(4);
  const auto res = approx_convex_minimize(*m, c, l, r);
  EXPECT_TRUE(std::isnan(res.report.success_rate));
  EXPECT_FALSE(res.gap.has_value());
  c.f_star = -0.05;
  Rng r2(4);
  EXPECT_FALSE(std::isnan(approx_convex_minimize(*m, c, l, r2).report.success_rate));
}

TEST(Optimizer, TenfoldSmoothingRadiusDegradesSuccess) {
  // Direction-only A/B: v = 10 eps / (M d) against the admissible radius, same seeds.
  auto m = make_perturbed_strongly_convex(2, 1.0, 0.05, 50.0);
  auto c = tuned();
  c.repeat_count = 20;
  auto mean_gap = [](const OptimizeResult& r) {
    double s = 0.0;
    for (double g : r.report.chain_gap) s += g;
    return s / static_cast<double>(r.report.chain_gap.size());
  };
  QueryLedger la, lb;
  Rng ra(21), rb(21);
  const auto base = approx_convex_minimize(*m, c, la, ra);
  c.smoothing_v = 10.0 * base.report.plan.v;
  c.allow_v_violation = true;
  const auto wide = approx_convex_minimize(*m, c, lb, rb);
  EXPECT_LE(wide.report.success_rate, base.report.success_rate);
  EXPECT_GT(mean_gap(wide), mean_gap(base));
}
