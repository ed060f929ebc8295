#include "qmcmc/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qmcmc {

namespace {

struct Named {
  Schedule s;
  const char* name;
};

constexpr Named kNames[] = {
    {Schedule::QsvrgHmc, "qsvrg_hmc"}, {Schedule::QcvHmc, "qcv_hmc"},
    {Schedule::QsvrgLmc, "qsvrg_lmc"}, {Schedule::QzHmc, "qz_hmc"},
    {Schedule::QzLmc, "qz_lmc"},       {Schedule::SvrgHmc, "svrg_hmc"},
    {Schedule::CvHmc, "cv_hmc"},       {Schedule::SgHmc, "sg_hmc"},
    {Schedule::SvrgLmc, "svrg_lmc"},   {Schedule::Sgld, "sgld"},
};

std::int64_t ceil_pos(double v) {
  if (!std::isfinite(v) || v > 9.0e18) throw std::invalid_argument("schedule value overflows");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(v)));
}

std::int64_t round_pos(double v) {
  if (!std::isfinite(v) || v > 9.0e18) throw std::invalid_argument("schedule value overflows");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(v)));
}

}  // namespace

std::string schedule_name(Schedule s) {
  for (const auto& n : kNames) {
    if (n.s == s) return n.name;
  }
  return "unknown";
}

Schedule parse_schedule(const std::string& name) {
  for (const auto& n : kNames) {
    if (name == n.name) return n.s;
  }
  throw std::invalid_argument("unknown schedule '" + name + "'");
}

const std::vector<Schedule>& all_schedules() {
  static const std::vector<Schedule> v = [] {
    std::vector<Schedule> out;
    for (const auto& n : kNames) out.push_back(n.s);
    return out;
  }();
  return v;
}

bool is_hmc(Schedule s) {
  return s == Schedule::QsvrgHmc || s == Schedule::QcvHmc || s == Schedule::QzHmc ||
         s == Schedule::SvrgHmc || s == Schedule::CvHmc || s == Schedule::SgHmc;
}

bool is_quantum(Schedule s) {
  return s == Schedule::QsvrgHmc || s == Schedule::QcvHmc || s == Schedule::QsvrgLmc ||
         s == Schedule::QzHmc || s == Schedule::QzLmc;
}

bool is_zeroth_order(Schedule s) { return s == Schedule::QzHmc || s == Schedule::QzLmc; }

std::int64_t HyperParams::total_steps() const { return is_hmc(schedule) ? S * T : K; }

void HyperParams::validate() const {
  require(eta > 0.0 && std::isfinite(eta), "eta must be positive");
  require(S >= 1 && T >= 1 && K >= 1, "S, T and K must be positive");
  require(b >= 1 && m >= 1, "b and m must be positive");
  require(sigma_hat_sq >= 0.0, "sigma_hat_sq must be nonnegative");
}

double component_gradient_spread(const PotentialModel& model, const Vector& x) {
  const int n = model.components();
  if (n == 1) return 0.0;
  const Vector g = model.gradient(x);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += (model.component_gradient(i, x) - g).squaredNorm();
  return s / n;
}

HyperParams plan_hyperparams(Schedule schedule, const PotentialModel& model, double eps,
                             const PlanOptions& opts) {
  require(eps > 0.0, "eps must be positive");
  for (const auto& [name, v] : opts.multipliers) {
    static const char* known[] = {"eta", "S", "T", "K", "b", "m", "sigma_hat"};
    const bool ok = std::any_of(std::begin(known), std::end(known),
                                [&](const char* k) { return name == k; });
    require(ok, "unknown schedule multiplier '" + name + "'");
    require(v > 0.0 && std::isfinite(v), "multiplier '" + name + "' must be positive");
  }
  auto c = [&](const char* name) {
    auto it = opts.multipliers.find(name);
    return it == opts.multipliers.end() ? 1.0 : it->second;
  };

  const auto& k = model.constants();
  const double d = k.d;
  const double n = k.n;
  const double L = k.L;
  const double mu = k.mu;
  const double alpha = k.lsi_alpha;
  const double sigma = k.noise_sigma;
  require(L > 0.0, "schedule needs the smoothness constant L");

  HyperParams hp;
  hp.schedule = schedule;
  hp.eps = eps;
  hp.constants = opts.multipliers;

  if (is_hmc(schedule)) {
    require(mu > 0.0, schedule_name(schedule) + " needs a strongly convex model (mu > 0)");
    const double kappa = L / mu;
    const double D = opts.initial_distance;
    const double w0 = std::sqrt(2.0 * D * D + 2.0 * d / mu);
    const std::int64_t T_log = ceil_pos(c("T") * 2.0 * kappa * std::log(1.0 + w0 / eps));
    const std::int64_t T_const = ceil_pos(c("T") * 2.0 * kappa * std::log(1.0 + w0));
    const double k32 = std::pow(kappa, 1.5);
    const double b_svrg = std::pow(L, 0.125) * std::pow(eps, 0.25) * std::sqrt(n) /
                          (std::pow(d, 0.125) * std::pow(kappa, 0.375));
    const double b_cv = std::pow(d, 0.25) * std::pow(kappa, 0.75) /
                        (std::pow(L, 0.25) * std::sqrt(eps));

    hp.eta = c("eta") * eps / (std::sqrt(L) * std::sqrt(d) * k32);
    hp.S = ceil_pos(c("S") * L * std::sqrt(d) * k32 / eps);
    switch (schedule) {
      case Schedule::QsvrgHmc:
        hp.T = T_log;
        hp.b = round_pos(c("b") * b_svrg);
        hp.m = round_pos(c("m") * n / hp.b);
        break;
      case Schedule::SvrgHmc:
        hp.T = T_log;
        hp.b = round_pos(c("b") * std::pow(b_svrg, 4.0 / 3.0));
        hp.m = round_pos(c("m") * n / hp.b);
        break;
      case Schedule::QcvHmc:
        hp.T = T_const;
        hp.b = round_pos(c("b") * b_cv);
        hp.m = hp.S * hp.T;
        break;
      case Schedule::CvHmc:
        hp.T = T_const;
        hp.b = round_pos(c("b") * b_cv * b_cv);
        hp.m = hp.S * hp.T;
        break;
      case Schedule::SgHmc: {
        hp.T = T_log;
        const double spread = k.x_star ? component_gradient_spread(model, *k.x_star) : 0.0;
        const double B = spread * std::sqrt(kappa) / (eps * L * L * std::sqrt(d));
        hp.b = std::min<std::int64_t>(k.n, ceil_pos(c("b") * B));
        hp.m = hp.S * hp.T;
        break;
      }
      case Schedule::QzHmc: {
        hp.eta = c("eta") * eps / (std::sqrt(d) * k32);
        hp.T = T_log;
        double s2 = std::pow(L, 1.5) * std::sqrt(d) * eps / k32;
        if (sigma > 0.0) s2 = std::min(s2, sigma * sigma);
        hp.sigma_hat_sq = c("sigma_hat") * s2;
        hp.m = hp.S * hp.T;
        break;
      }
      default:
        break;
    }
  } else {
    require(alpha > 0.0, schedule_name(schedule) + " needs an LSI constant (alpha > 0)");
    hp.kl0 = opts.kl0 > 0.0 ? opts.kl0 : std::max(1.0, 0.5 * d * std::log(L / alpha));
    const double log_kl = std::max(1.0, std::log(hp.kl0));
    switch (schedule) {
      case Schedule::QsvrgLmc: {
        hp.b = round_pos(c("b") * std::cbrt(n));
        hp.m = std::min(hp.b * hp.b, round_pos(c("m") * std::pow(n, 2.0 / 3.0)));
        hp.eta = c("eta") * std::min(eps * alpha / (d * L * L), alpha / (L * L * hp.m));
        hp.K = ceil_pos(c("K") * L * L * log_kl / (alpha * alpha) *
                        (std::pow(n, 2.0 / 3.0) + d / eps));
        break;
      }
      case Schedule::SvrgLmc: {
        hp.b = round_pos(c("b") * std::sqrt(n));
        hp.m = round_pos(c("m") * std::sqrt(n));
        hp.eta = c("eta") * std::min(eps * alpha / (d * L * L), alpha / (L * L * hp.m));
        hp.K = ceil_pos(c("K") * L * L * log_kl / (alpha * alpha) * (std::sqrt(n) + d / eps));
        break;
      }
      case Schedule::QzLmc:
        hp.eta = c("eta") * eps * alpha / (d * L * L);
        hp.K = ceil_pos(c("K") * d * L * L * log_kl / (eps * alpha * alpha));
        hp.sigma_hat_sq = c("sigma_hat") * alpha * eps;
        break;
      case Schedule::Sgld: {
        hp.eta = c("eta") * eps * alpha / (d * L * L);
        hp.K = ceil_pos(c("K") * d * L * L * log_kl / (eps * alpha * alpha));
        const double spread = k.x_star ? component_gradient_spread(model, *k.x_star) : 0.0;
        hp.b = std::min<std::int64_t>(k.n, ceil_pos(c("b") * spread / (alpha * eps)));
        break;
      }
      default:
        break;
    }
  }
  hp.validate();
  return hp;
}

}  // namespace qmcmc
