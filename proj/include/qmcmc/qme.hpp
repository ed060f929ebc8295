#pragma once

#include "qmcmc/ledger.hpp"
#include "qmcmc/rng.hpp"
#include "qmcmc/types.hpp"

#include <cstdint>
#include <functional>

namespace qmcmc {

enum class OracleKind { Gradient, Evaluation };

// max(1, ln d * ln(1/delta_fail))
double default_log_factor(int d, double delta_fail = 1e-3);

struct QmeRequest {
  std::function<Vector(Rng&)> sample_source;  // must not charge any ledger itself
  double var_bound = 0.0;                     // bound on E||X - EX||^2
  double sigma_hat_sq = 1.0;                  // requested output variance
  int d = 1;
  double c_q = 1.0;
  double log_factor = 1.0;
  OracleKind kind = OracleKind::Gradient;
  std::uint64_t queries_per_sample = 1;       // oracle queries behind one source draw
  std::uint64_t max_draws = 50'000'000;       // emulation budget
};

std::uint64_t qme_batch_size(double var_bound, double sigma_hat_sq);

// Quantum-charged query count for one estimate (before queries_per_sample).
std::uint64_t qme_quantum_cost(const QmeRequest& req);

// Unbiased estimate with variance <= sigma_hat_sq, emulated by averaging
// ceil(var_bound / sigma_hat_sq) draws. The ledger sees the quantum charge only.
Vector quantum_mean_estimate(const QmeRequest& req, QueryLedger& ledger, Rng& rng);

struct PhaseCharge {
  std::uint64_t queries = 0;
  bool failed = false;
};

struct PhaseCostModel {
  double c_q = 1.0;
  double log_factor = 1.0;
};

std::uint64_t phase_oracle_cost(double t, double sigma, double epsilon, const PhaseCostModel& m);

// Charges the phase-oracle evaluation cost and flags failure with probability 1/9,
// drawn from the dedicated phase stream.
PhaseCharge phase_oracle_charge(double t, double sigma, double epsilon, QueryLedger& ledger,
                                Rng& phase_rng, const PhaseCostModel& m = {});

}  // namespace qmcmc
