#pragma once

#include "qmcmc/jordan.hpp"
#include "qmcmc/ledger.hpp"
#include "qmcmc/potentials.hpp"
#include "qmcmc/qme.hpp"
#include "qmcmc/rng.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

namespace qmcmc {

enum class BiasFlag { Unbiased, BiasedHighProb };

struct GradEstimate {
  Vector g;
  double sigma_hat_sq = 0.0;
  BiasFlag bias = BiasFlag::Unbiased;
  QueryLedger ledger_delta;
};

// Two-point Gaussian-direction estimator averaged over b directions; 2b classical evaluations.
GradEstimate gaussian_smoothing_gradient(const PotentialModel& model, const Vector& x, double nu,
                                         int b, QueryLedger& ledger, Rng& rng);

// ------------------------------------------------------------------ MLMC

using BiasedEstimator = std::function<Vector(double s, Rng& rng)>;

struct MlmcOptions {
  int j_max = 40;
};

// Level-j accuracy 2^{-3j/4} sigma_hat / 10.
double mlmc_level_target(int j, double sigma_hat);
// P(J = j) = 2^-j for j < j_max, the remaining tail 2^-(j_max - 1) at j_max.
double mlmc_level_probability(int j, int j_max);
int mlmc_draw_level(Rng& rng, int j_max);
// g0 + (gJ - gJm1) / P(J)
Vector mlmc_combine(const Vector& g0, const Vector& gJ, const Vector& gJm1, int J, int j_max);

Vector mlmc_unbiased(const BiasedEstimator& est, double sigma_hat, Rng& rng,
                     const MlmcOptions& opts = {}, int* level = nullptr);

// --------------------------------------------------------- phase pipeline

enum class JordanMode { Auto, Statevector, Contract };

struct PipelineOptions {
  JordanMode mode = JordanMode::Contract;
  double c_q = 1.0;
  double log_factor = 0.0;  // <= 0 selects default_log_factor(d)
  int qubit_budget = 24;
  double jordan_constant = 1500.0;
  // Success probability of one contract run given a working phase oracle; with the
  // 8/9 phase success this gives 5/9 for a single attempt.
  double jordan_success_prob = 5.0 / 8.0;
  bool retry_phase_failure = true;
  bool odd_repetitions = true;
  // true: T from chernoff_median_repetitions at the per-run success probability;
  // false: T from median_repetitions.
  bool chernoff_repetitions = true;
  MlmcOptions mlmc;
};

struct PipelineRunPlan {
  double s = 0.0;           // accuracy target of the median
  GridSpec grid;            // grid for one Jordan run (center filled per call)
  double t = 0.0;           // phase multiplier N/(2 L l)
  double sigma_x = 0.0;     // std of the phase variable, sigma l sqrt(d)
  double eps_phase = 0.0;   // 1/N0
  std::uint64_t charge = 0; // evaluation queries per phase-oracle attempt
  int T = 1;                // median repetitions
  bool statevector = false;
};

// Full pipeline: phase-oracle Jordan runs, coordinate-wise median, MLMC unbiasing.
class PhasePipeline {
 public:
  PhasePipeline(const PotentialModel& model, PipelineOptions opts, std::uint64_t phase_seed);

  const PipelineRunPlan& plan(double s);
  // One phase-oracle Jordan run at accuracy s (biased, succeeds with constant probability).
  Vector single_run(const Vector& x, double s, QueryLedger& ledger, Rng& rng);
  // Probability that one run lands within s/2 (contract model).
  double run_success_probability() const;
  // Median of T runs: MSE <= s^2.
  Vector biased(const Vector& x, double s, QueryLedger& ledger, Rng& rng);
  // Unbiased, variance <= sigma_hat^2.
  Vector unbiased(const Vector& x, double sigma_hat, QueryLedger& ledger, Rng& rng);

  std::uint64_t phase_failures() const { return phase_failures_; }
  std::uint64_t corrupted_runs() const { return corrupted_; }

 private:
  Vector run_at(const Vector& x, const Vector& g, double s, QueryLedger& ledger, Rng& rng);
  Vector contract_median(const Vector& g, double s, QueryLedger& ledger, Rng& rng);
  Vector contract_median_1d(const Vector& g, double s, QueryLedger& ledger, Rng& rng);
  const PotentialModel& model_;
  PipelineOptions opts_;
  Rng phase_rng_;
  std::map<double, PipelineRunPlan> plans_;
  std::uint64_t phase_failures_ = 0;
  std::uint64_t corrupted_ = 0;
  std::vector<double> buffer_;
};

// Loose target (sigma_hat >= sigma): one stochastic-gradient sample already has variance
// <= sigma_hat^2. Charges ceil(c_q * log_factor) evaluation queries.
Vector single_sample_gradient(const PotentialModel& model, const Vector& x, QueryLedger& ledger,
                              Rng& rng, double c_q = 1.0, double log_factor = 0.0);

// Falls back to single_sample_gradient when sigma_hat >= sigma.
GradEstimate phase_pipeline_gradient(const PotentialModel& model, const Vector& x,
                                     double sigma_hat, QueryLedger& ledger, Rng& rng,
                                     const PipelineOptions& opts = {});

// ------------------------------------------------------------ robust estimator

// Per-component gradient estimate for component xi at x (one Jordan run on f(.; xi)).
struct ComponentJordan {
  std::function<Vector(std::uint64_t xi, const Vector& x, Rng& rng)> run;
  double extra_variance = 0.0;          // variance added by emulated failures
  std::uint64_t queries_per_run = 2;    // compute + uncompute
};

// Contract emulation on a model: grad f(x; xi) plus a uniform-ball perturbation of radius
// eps/8 with probability success_prob, otherwise a radius-M corruption.
ComponentJordan model_component_jordan(const PotentialModel& model, double eps,
                                       double success_prob = 5.0 / 9.0);

struct RobustGradParams {
  double beta = 0.0;       // c * 164 L sigma^2 / eps^2
  double D = 0.0;          // 40 sigma^2 / eps
  double eps_prime = 0.0;  // eps^2 / (beta^2 d^3 12000^2)
  double M = 0.0;
};

RobustGradParams robust_grad_params(int d, double L, double sigma, double M, double eps,
                       double beta_constant = 1.0);

enum class AnchorPolicy { Single, RedrawWhenDetectable };

struct RobustGradOptions {
  double beta_constant = 1.0;
  std::optional<double> clip_D;     // default 40 sigma^2 / eps; infinity disables clipping
  std::optional<double> var_bound;  // default 10 sigma^2 + 3 eps^2 + source extra variance
  double delta = 0.05;
  double c_q = 1.0;
  double log_factor = 0.0;
  AnchorPolicy anchor = AnchorPolicy::Single;
  int max_anchor_draws = 64;
  std::uint64_t max_draws = 50'000'000;
};

struct RobustGradResult {
  Vector v;
  int anchor_draws = 1;
  bool anchor_flagged = false;
  std::uint64_t clipped = 0;
  std::uint64_t draws = 0;
  RobustGradParams params;
};

struct StochasticProblem {
  int d = 1;
  double L = 0.0;
  double sigma = 0.0;
  double M = 0.0;
};

RobustGradResult quantum_stochastic_gradient(const ComponentJordan& source,
                                       const StochasticProblem& problem, const Vector& x,
                                       double eps, QueryLedger& ledger, Rng& rng,
                                       const RobustGradOptions& opts = {},
                                       const Vector* exact_gradient = nullptr);

RobustGradResult quantum_stochastic_gradient(const PotentialModel& model, const Vector& x, double eps,
                                       QueryLedger& ledger, Rng& rng,
                                       const RobustGradOptions& opts = {});

// Non-smooth-component regime: median of robust-estimator runs wrapped by MLMC.
Vector robust_mlmc_gradient(const PotentialModel& model, const Vector& x, double sigma_hat,
                          QueryLedger& ledger, Rng& rng, const RobustGradOptions& opts = {},
                          const MlmcOptions& mlmc = {});

}  // namespace qmcmc
