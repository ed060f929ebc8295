#pragma once

#include "qmcmc/potentials.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qmcmc {

enum class Schedule {
  QsvrgHmc,
  QcvHmc,
  QsvrgLmc,
  QzHmc,
  QzLmc,
  SvrgHmc,   // classical baselines below
  CvHmc,
  SgHmc,
  SvrgLmc,
  Sgld,
};

std::string schedule_name(Schedule s);
Schedule parse_schedule(const std::string& name);
const std::vector<Schedule>& all_schedules();
bool is_hmc(Schedule s);
bool is_quantum(Schedule s);
bool is_zeroth_order(Schedule s);

struct PlanOptions {
  // Multipliers on each O(.) term: eta, S, T, K, b, m, sigma_hat. Missing names mean 1.
  std::map<std::string, double> multipliers;
  double kl0 = 0.0;               // KL(mu0 || pi); <= 0 selects max(1, (d/2) ln(L/alpha))
  double initial_distance = 0.0;  // ||x0 - x*||
};

struct HyperParams {
  Schedule schedule = Schedule::QsvrgHmc;
  double eps = 0.0;
  double eta = 0.0;
  std::int64_t S = 1;  // leapfrog steps per proposal
  std::int64_t T = 1;  // proposals
  std::int64_t K = 1;  // Langevin steps
  std::int64_t b = 1;  // quantum batch scale, or classical mini-batch size for baselines
  std::int64_t m = 1;  // epoch length
  double sigma_hat_sq = 0.0;
  double kl0 = 0.0;
  std::map<std::string, double> constants;

  std::int64_t total_steps() const;
  void validate() const;
};

HyperParams plan_hyperparams(Schedule schedule, const PotentialModel& model, double eps,
                             const PlanOptions& opts = {});

// E_i ||grad f_i(x) - grad f(x)||^2 by exhaustive sum over components.
double component_gradient_spread(const PotentialModel& model, const Vector& x);

}  // namespace qmcmc
