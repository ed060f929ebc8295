#include "qmcmc/optimizer.hpp"

#include "qmcmc/qme.hpp"
#include "qmcmc/samplers.hpp"

#include <cmath>
#include <limits>

namespace qmcmc {

nlohmann::json OptimizerPlan::to_json() const {
  return {{"beta", beta},
          {"v", v},
          {"M", M},
          {"L", L},
          {"alpha", alpha},
          {"kl_target", kl_target},
          {"theory_eta", theory_eta},
          {"theory_steps", theory_steps},
          {"theory_sigma_hat_sq", theory_sigma_hat_sq},
          {"eta", eta},
          {"steps", steps},
          {"sigma_hat_sq", sigma_hat_sq}};
}

namespace {

const PerturbedStronglyConvex& as_perturbed(const PotentialModel& model) {
  const auto* p = dynamic_cast<const PerturbedStronglyConvex*>(&model);
  require(p != nullptr, "the optimizer needs a PerturbedStronglyConvex model");
  return *p;
}

}  // namespace

OptimizerPlan plan_optimizer(const PotentialModel& model, const OptimizeConfig& cfg) {
  const auto& pm = as_perturbed(model);
  require(cfg.eps > 0.0, "eps must be positive");
  require(cfg.repeat_count >= 1, "repeat_count must be at least 1");
  require(cfg.tv_target > 0.0 && cfg.tv_target < 1.0, "tv_target must lie in (0, 1)");
  const double d = model.dim();
  OptimizerPlan p;
  p.M = cfg.lipschitz_M.value_or(model.constants().M);
  require(p.M > 0.0, "lipschitz_M must be positive");
  p.beta = cfg.beta_temp.value_or(cfg.beta_constant * d / cfg.eps);
  require(p.beta > 0.0, "beta_temp must be positive");
  const double v_max = cfg.eps / (std::max(p.M, 1.0) * d);
  p.v = cfg.smoothing_v.value_or(v_max);
  require(p.v > 0.0, "smoothing_v must be positive");
  require(cfg.allow_v_violation || p.v <= v_max * (1.0 + 1e-12),
          "smoothing_v exceeds eps / (M d)");
  p.L = cfg.smoothness_constant * p.beta * p.M * std::sqrt(d) / p.v;
  p.alpha = 0.5 * p.beta * pm.convex_mu() * std::exp(-3.0 * p.beta * cfg.eps / d);
  p.kl_target = 2.0 * cfg.tv_target * cfg.tv_target;

  // Same schedule as the zeroth-order LMC planner, on beta f_v.
  const double kl0 = std::max(1.0, 0.5 * d * std::log(p.L / p.alpha));
  const double log_kl = std::max(1.0, std::log(kl0));
  p.theory_eta = p.kl_target * p.alpha / (d * p.L * p.L);
  const double k = std::ceil(d * p.L * p.L * log_kl / (p.kl_target * p.alpha * p.alpha));
  p.theory_steps = k >= 9.2e18 ? std::numeric_limits<std::int64_t>::max()
                               : static_cast<std::int64_t>(k);
  p.theory_sigma_hat_sq = p.alpha * p.kl_target;

  p.eta = cfg.eta.value_or(p.theory_eta);
  p.steps = cfg.steps.value_or(p.theory_steps);
  p.sigma_hat_sq = cfg.sigma_hat_sq.value_or(p.theory_sigma_hat_sq);
  require(p.eta > 0.0 && p.steps >= 1 && p.sigma_hat_sq > 0.0,
          "optimizer schedule must be positive");
  return p;
}

OptimizeResult approx_convex_minimize(const PotentialModel& model, const OptimizeConfig& cfg,
                                      QueryLedger& ledger, Rng& rng) {
  const auto& pm = as_perturbed(model);
  const OptimizerPlan plan = plan_optimizer(model, cfg);
  const int d = model.dim();
  const double a = model.constants().noise_amplitude;
  const double osc_lip = pm.amplitude() * pm.frequency() * std::sqrt(static_cast<double>(d));
  const double lf = cfg.log_factor > 0.0 ? cfg.log_factor : default_log_factor(d);

  std::optional<double> f_star = cfg.f_star;
  if (!f_star && d <= 3) {
    const double h = std::sqrt(4.0 * pm.amplitude() / pm.convex_mu()) + 0.05;
    f_star = grid_search_minimum(model, pm.center(), h, d == 1 ? 20001 : (d == 2 ? 801 : 101)).f;
  }

  auto body = [&](int, QueryLedger& led, Rng& r) {
    Rng init = r.split(Stream::Init);
    Rng noise = r.split(Stream::Noise);
    Rng prov = r.split(Stream::Provider);
    Vector x = pm.center() + cfg.init_radius * init.unit_ball(d);
    const double step_noise = std::sqrt(2.0 * plan.eta);
    for (std::int64_t k = 0; k < plan.steps; ++k) {
      // Lipschitz bound of f on the v-ball around x, which is all the estimator touches.
      const double m_loc = pm.convex_mu() * ((x - pm.center()).norm() + plan.v) + osc_lip;
      const double bound = plan.beta * d * (1.0 + a) * m_loc;
      QmeRequest req;
      req.d = d;
      req.var_bound = bound * bound;
      req.sigma_hat_sq = plan.sigma_hat_sq;
      req.c_q = cfg.c_q;
      req.log_factor = lf;
      req.kind = OracleKind::Evaluation;
      req.queries_per_sample = 2;
      req.sample_source = [&](Rng& s) {
        return Vector(plan.beta * smoothed_grad_sample(model, x, plan.v,
                                                       {s.next_u64(), SeedPurpose::NoiseRealization}));
      };
      const Vector g = quantum_mean_estimate(req, led, prov);
      x += -plan.eta * g + step_noise * noise.normal_vector(d);
      if (!x.allFinite() || x.norm() > 1e6) throw DivergenceError("optimizer chain diverged", k);
    }
    Trajectory t;
    t.final_x = x;
    t.total_steps = plan.steps;
    return t;
  };
  ChainBatch batch = run_chains(cfg.repeat_count, rng.split(Stream::Chain).seed(), cfg.workers, body);

  OptimizeResult res;
  res.report.plan = plan;
  double best_obs = std::numeric_limits<double>::infinity();
  Rng select = rng.split(Stream::Trial);
  int hits = 0;
  for (int c = 0; c < cfg.repeat_count; ++c) {
    const Vector& x = batch.chains[c].final_x;
    const double obs = stochastic_eval(model, x, {select.next_u64(), SeedPurpose::NoiseRealization},
                                       &batch.total);
    const double f = eval_exact(model, x);
    res.report.chain_x.push_back(x);
    res.report.chain_f.push_back(f);
    res.report.chain_observed.push_back(obs);
    if (f_star) {
      const double gap = f - *f_star;
      res.report.chain_gap.push_back(gap);
      if (gap <= cfg.eps) ++hits;
    }
    if (obs < best_obs) {
      best_obs = obs;
      res.x_best = x;
      res.f_best = f;
    }
  }
  res.report.success_rate =
      f_star ? static_cast<double>(hits) / cfg.repeat_count : std::numeric_limits<double>::quiet_NaN();
  if (f_star) res.gap = res.f_best - *f_star;
  res.report.ledger = batch.total;
  ledger.merge(batch.total);
  return res;
}

GridMinimum grid_search_minimum(const PotentialModel& model, const Vector& center,
                                double half_width, int points_per_axis, int refinements) {
  const int d = model.dim();
  require(d >= 1 && d <= 3, "grid search supports d <= 3");
  require(center.size() == d && half_width > 0.0 && points_per_axis >= 3,
          "invalid grid search arguments");
  GridMinimum best{center, std::numeric_limits<double>::infinity()};
  Vector c = center;
  double h = half_width;
  for (int round = 0; round <= refinements; ++round) {
    const double step = 2.0 * h / (points_per_axis - 1);
    std::int64_t total = 1;
    for (int j = 0; j < d; ++j) total *= points_per_axis;
    Vector x(d);
    for (std::int64_t idx = 0; idx < total; ++idx) {
      std::int64_t r = idx;
      for (int j = 0; j < d; ++j) {
        x(j) = c(j) - h + step * static_cast<double>(r % points_per_axis);
        r /= points_per_axis;
      }
      const double f = model.value(x);
      if (f < best.f) {
        best.f = f;
        best.x = x;
      }
    }
    c = best.x;
    h = 2.0 * step;
  }
  return best;
}

}  // namespace qmcmc
