#include "qmcmc/qme.hpp"

#include <cmath>
#include <stdexcept>

namespace qmcmc {

double default_log_factor(int d, double delta_fail) {
  return std::max(1.0, std::log(static_cast<double>(d)) * std::log(1.0 / delta_fail));
}

std::uint64_t qme_batch_size(double var_bound, double sigma_hat_sq) {
  require(std::isfinite(var_bound) && var_bound >= 0.0, "var_bound must be finite and >= 0");
  require(std::isfinite(sigma_hat_sq) && sigma_hat_sq > 0.0, "sigma_hat_sq must be positive");
  if (sigma_hat_sq >= var_bound) return 1;
  return static_cast<std::uint64_t>(std::ceil(var_bound / sigma_hat_sq));
}

std::uint64_t qme_quantum_cost(const QmeRequest& req) {
  require(req.c_q > 0.0 && req.log_factor > 0.0, "cost constants must be positive");
  if (req.sigma_hat_sq >= req.var_bound) {
    return static_cast<std::uint64_t>(std::ceil(req.c_q * req.log_factor));
  }
  const double q = req.c_q * std::sqrt(static_cast<double>(req.d)) *
                   std::sqrt(req.var_bound / req.sigma_hat_sq) * req.log_factor;
  return static_cast<std::uint64_t>(std::ceil(q));
}

Vector quantum_mean_estimate(const QmeRequest& req, QueryLedger& ledger, Rng& rng) {
  require(req.d > 0, "dimension must be positive");
  require(static_cast<bool>(req.sample_source), "sample source is required");
  const std::uint64_t B = qme_batch_size(req.var_bound, req.sigma_hat_sq);
  if (B > req.max_draws) {
    throw std::runtime_error("mean-estimation emulation needs " + std::to_string(B) +
                             " draws, above the configured budget");
  }
  Vector acc = Vector::Zero(req.d);
  for (std::uint64_t i = 0; i < B; ++i) {
    Vector s = req.sample_source(rng);
    if (s.size() != req.d) throw std::invalid_argument("sample dimension mismatch");
    if (!s.allFinite()) throw std::runtime_error("non-finite sample from mean-estimation source");
    acc += s;
  }
  acc /= static_cast<double>(B);

  const std::uint64_t q = qme_quantum_cost(req) * req.queries_per_sample;
  if (req.kind == OracleKind::Gradient) {
    ledger.charge_grad_quantum(q);
  } else {
    ledger.charge_eval_quantum(q);
  }
  ledger.record_emulation_draws(B);
  return acc;
}

std::uint64_t phase_oracle_cost(double t, double sigma, double epsilon, const PhaseCostModel& m) {
  require(t >= 0.0 && sigma >= 0.0, "t and sigma must be nonnegative");
  require(epsilon > 0.0 && epsilon < 1.0, "phase-oracle epsilon must lie in (0, 1)");
  if (t == 0.0) return 0;
  const double c = std::ceil(m.c_q * t * sigma * std::log(1.0 / epsilon) * m.log_factor);
  if (c >= 1.8e19) return UINT64_MAX;
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(c));
}

PhaseCharge phase_oracle_charge(double t, double sigma, double epsilon, QueryLedger& ledger,
                                Rng& phase_rng, const PhaseCostModel& m) {
  PhaseCharge pc;
  pc.queries = phase_oracle_cost(t, sigma, epsilon, m);
  ledger.charge_eval_quantum(pc.queries);
  pc.failed = phase_rng.uniform_int(0, 8) == 0;
  return pc;
}

}  // namespace qmcmc
