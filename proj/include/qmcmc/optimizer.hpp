#pragma once

#include "qmcmc/ledger.hpp"
#include "qmcmc/potentials.hpp"
#include "qmcmc/rng.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace qmcmc {

struct OptimizeConfig {
  double eps = 0.2;                      // target optimality gap
  double beta_constant = 2.0;            // beta_temp = beta_constant * d / eps
  std::optional<double> beta_temp;       // overrides the formula above
  std::optional<double> smoothing_v;     // default eps / (M d)
  std::optional<double> lipschitz_M;     // default: the model's declared M
  bool allow_v_violation = false;        // permits v > eps / (M d), for A/B runs only
  int repeat_count = 10;
  double tv_target = 0.1;                // sampler accuracy; KL target 2 tv^2
  double smoothness_constant = 1.0;      // L = c * beta M sqrt(d) / v
  // Schedule overrides. The planned schedule is reported either way.
  std::optional<double> eta;
  std::optional<std::int64_t> steps;
  std::optional<double> sigma_hat_sq;
  double init_radius = 2.0;              // chains start uniformly in this ball around the center
  double c_q = 1.0;
  double log_factor = 0.0;
  int workers = 1;
  std::optional<double> f_star;          // known minimum value, for gap reporting
};

// Constants the sampler is run with, and the schedule the sampling bound asks for.
struct OptimizerPlan {
  double beta = 0.0;
  double v = 0.0;
  double M = 0.0;
  double L = 0.0;        // smoothness of beta f_v
  double alpha = 0.0;    // LSI lower bound (beta mu / 2) exp(-3 beta eps / d)
  double kl_target = 0.0;
  double theory_eta = 0.0;
  std::int64_t theory_steps = 0;
  double theory_sigma_hat_sq = 0.0;
  double eta = 0.0;      // used
  std::int64_t steps = 0;
  double sigma_hat_sq = 0.0;

  nlohmann::json to_json() const;
};

OptimizerPlan plan_optimizer(const PotentialModel& model, const OptimizeConfig& cfg);

struct OptimizeReport {
  OptimizerPlan plan;
  std::vector<Vector> chain_x;
  std::vector<double> chain_f;       // exact f at each chain output
  std::vector<double> chain_observed;
  std::vector<double> chain_gap;     // empty unless f_star is known
  double success_rate = 0.0;         // fraction of chains with gap <= eps
  QueryLedger ledger;
};

struct OptimizeResult {
  Vector x_best;
  double f_best = 0.0;
  std::optional<double> gap;
  OptimizeReport report;
};

// QZ-LMC on beta * f_v with smoothed two-point gradients, repeated over independent chains.
// Requires a PerturbedStronglyConvex model.
OptimizeResult approx_convex_minimize(const PotentialModel& model, const OptimizeConfig& cfg,
                                      QueryLedger& ledger, Rng& rng);

struct GridMinimum {
  Vector x;
  double f = 0.0;
};

// Dense grid search on [center - h, center + h]^d (d <= 3), refined by shrinking grids.
GridMinimum grid_search_minimum(const PotentialModel& model, const Vector& center,
                                double half_width, int points_per_axis, int refinements = 3);

}  // namespace qmcmc
