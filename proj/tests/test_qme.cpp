#include "qmcmc/ledger.hpp"
#include "qmcmc/qme.hpp"
#include "qmcmc/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qmcmc;

namespace {

QmeRequest gaussian_request(const Vector& m, double sigma, double sigma_hat_sq) {
  QmeRequest req;
  req.d = static_cast<int>(m.size());
  req.sample_source = [m, sigma](Rng& r) -> Vector { return m + sigma * r.normal_vector(m.size()); };
  req.var_bound = sigma * sigma * m.size();
  req.sigma_hat_sq = sigma_hat_sq;
  return req;
}

}  // namespace

TEST(Qme, ConstantSource) {
  QmeRequest req;
  req.d = 3;
  const Vector c = Vector::LinSpaced(3, -1.0, 1.0);
  req.sample_source = [c](Rng&) { return c; };
  req.var_bound = 0.0;
  req.sigma_hat_sq = 0.5;
  req.c_q = 2.0;
  req.log_factor = 1.3;
  QueryLedger l;
  Rng r(1);
  EXPECT_EQ(quantum_mean_estimate(req, l, r), c);
  EXPECT_EQ(l.emulation_draws(), 1u);
  EXPECT_EQ(l.totals().grad_q, 3u);  // ceil(2 * 1.3)
  EXPECT_EQ(l.totals().grad_c, 0u);
}

TEST(Qme, NoReductionIsOneRawSample) {
  auto req = gaussian_request(Vector::Zero(2), 1.0, 2.0);
  EXPECT_EQ(qme_batch_size(req.var_bound, req.sigma_hat_sq), 1u);
  QueryLedger l;
  Rng a(7), b(7);
  const Vector out = quantum_mean_estimate(req, l, a);
  EXPECT_EQ(out, req.sample_source(b));
}

TEST(Qme, EvaluationKindChargesEvaluationCounter) {
  auto req = gaussian_request(Vector::Zero(1), 1.0, 0.25);
  req.kind = OracleKind::Evaluation;
  req.queries_per_sample = 2;
  QueryLedger l;
  Rng r(1);
  quantum_mean_estimate(req, l, r);
  EXPECT_EQ(l.totals().eval_q, 2u * qme_quantum_cost(req));
  EXPECT_EQ(l.totals().grad_q, 0u);
  EXPECT_EQ(l.emulation_draws(), 4u);
}

TEST(Qme, GaussianContractD4) {
  const int d = 4;
  const double sigma = 1.5;
  Vector m(d);
  m << 1.0, -2.0, 0.5, 3.0;
  auto req = gaussian_request(m, sigma, sigma * sigma * d / 100.0);
  QueryLedger l;
  Rng r(2024);
  const int n = 10000;
  Vector sum = Vector::Zero(d);
  double ss = 0.0;
  std::vector<Vector> outs;
  outs.reserve(n);
  for (int i = 0; i < n; ++i) {
    outs.push_back(quantum_mean_estimate(req, l, r));
    sum += outs.back();
  }
  const Vector mean = sum / n;
  for (const auto& o : outs) ss += (o - mean).squaredNorm();
  const double var = ss / (n - 1);
  EXPECT_LE(var, 1.1 * req.sigma_hat_sq);
  // Per-coordinate variance is sigma^2 / B; chi-square with d dof, 0.99 quantile 13.28.
  const double per_coord = sigma * sigma / static_cast<double>(qme_batch_size(req.var_bound, req.sigma_hat_sq));
  const double chi2 = n * (mean - m).squaredNorm() / per_coord;
  EXPECT_LT(chi2, 13.28);
  EXPECT_EQ(l.totals().grad_q, static_cast<std::uint64_t>(n) * qme_quantum_cost(req));
}

TEST(Qme, QuantumCostFormula) {
  QmeRequest req;
  req.d = 4;
  req.var_bound = 9.0;
  req.sigma_hat_sq = 0.01;
  req.c_q = 1.0;
  req.log_factor = 2.0;
  // ceil(1 * 2 * 30 * 2) = 120
  EXPECT_EQ(qme_quantum_cost(req), 120u);
}

TEST(Qme, CostMonotonicity) {
  Rng r(3);
  for (int k = 0; k < 500; ++k) {
    QmeRequest a;
    a.d = static_cast<int>(r.uniform_int(1, 50));
    a.var_bound = 10.0 * r.uniform();
    a.sigma_hat_sq = 0.01 + r.uniform();
    a.log_factor = 1.0 + r.uniform();
    const auto q = qme_quantum_cost(a);
    QmeRequest b = a;
    b.sigma_hat_sq *= 1.5;
    EXPECT_LE(qme_quantum_cost(b), q);
    b = a;
    b.d += 3;
    EXPECT_GE(qme_quantum_cost(b), q);
    b = a;
    b.var_bound *= 2.0;
    EXPECT_GE(qme_quantum_cost(b), q);
  }
}

TEST(Qme, Errors) {
  auto req = gaussian_request(Vector::Zero(2), 1.0, 0.0);
  QueryLedger l;
  Rng r(1);
  EXPECT_THROW(quantum_mean_estimate(req, l, r), std::invalid_argument);
  req.sigma_hat_sq = -1.0;
  EXPECT_THROW(quantum_mean_estimate(req, l, r), std::invalid_argument);
  req.sigma_hat_sq = 1.0;
  req.sample_source = [](Rng&) { return Vector::Constant(2, std::nan("")); };
  EXPECT_THROW(quantum_mean_estimate(req, l, r), std::runtime_error);
  req.var_bound = std::numeric_limits<double>::infinity();
  EXPECT_THROW(quantum_mean_estimate(req, l, r), std::invalid_argument);
}

TEST(PhaseOracle, Examples) {
  QueryLedger l;
  Rng r(1);
  EXPECT_EQ(phase_oracle_charge(0.0, 2.0, 0.01, l, r).queries, 0u);
  EXPECT_EQ(phase_oracle_charge(1.0, 0.0, 0.01, l, r).queries, 1u);
  EXPECT_EQ(phase_oracle_charge(10.0, 2.0, 0.01, l, r).queries, 93u);
  EXPECT_EQ(l.totals().eval_q, 94u);
  EXPECT_THROW(phase_oracle_charge(1.0, 1.0, 0.0, l, r), std::invalid_argument);
  EXPECT_THROW(phase_oracle_charge(1.0, 1.0, 1.0, l, r), std::invalid_argument);
  EXPECT_THROW(phase_oracle_charge(-1.0, 1.0, 0.5, l, r), std::invalid_argument);
}

TEST(PhaseOracle, FailureFrequencyIsOneNinth) {
  QueryLedger l;
  Rng r(99);
  const int n = 90000;
  int fails = 0;
  for (int i = 0; i < n; ++i) fails += phase_oracle_charge(1.0, 1.0, 0.5, l, r).failed;
  const double p = 1.0 / 9.0;
  EXPECT_NEAR(static_cast<double>(fails) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Qme, DefaultLogFactor) {
  EXPECT_DOUBLE_EQ(default_log_factor(1), 1.0);
  EXPECT_NEAR(default_log_factor(10), std::log(10.0) * std::log(1000.0), 1e-12);
}
