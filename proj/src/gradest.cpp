#include "qmcmc/gradest.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace qmcmc {

GradEstimate gaussian_smoothing_gradient(const PotentialModel& model, const Vector& x, double nu,
                                         int b, QueryLedger& ledger, Rng& rng) {
  require(nu > 0.0, "smoothing radius nu must be positive");
  require(b >= 1, "batch size must be at least 1");
  const int d = model.dim();
  require(x.size() == d, "dimension mismatch");
  GradEstimate out;
  out.ledger_delta.set_phase(ledger.phase());
  out.g = Vector::Zero(d);
  for (int i = 0; i < b; ++i) {
    const Vector u = rng.normal_vector(d);
    const StochasticSeed xi{rng.next_u64(), SeedPurpose::NoiseRealization};
    const double f1 = stochastic_eval(model, x + nu * u, xi, &out.ledger_delta);
    const double f0 = stochastic_eval(model, x, xi, &out.ledger_delta);
    out.g += ((f1 - f0) / nu) * u;
  }
  out.g /= static_cast<double>(b);
  out.sigma_hat_sq = std::numeric_limits<double>::quiet_NaN();
  out.bias = BiasFlag::BiasedHighProb;  // unbiased for grad f_nu, not grad f
  ledger.merge(out.ledger_delta);
  return out;
}

// ------------------------------------------------------------------ MLMC

double mlmc_level_target(int j, double sigma_hat) {
  return std::exp2(-0.75 * j) * sigma_hat / 10.0;
}

double mlmc_level_probability(int j, int j_max) {
  require(j_max >= 1, "j_max must be at least 1");
  if (j < 1 || j > j_max) return 0.0;
  if (j < j_max) return std::exp2(-j);
  return std::exp2(-(j_max - 1));
}

int mlmc_draw_level(Rng& rng, int j_max) {
  int j = 1;
  while (j < j_max && (rng.next_u64() >> 63) == 0) ++j;
  return j;
}

Vector mlmc_combine(const Vector& g0, const Vector& gJ, const Vector& gJm1, int J, int j_max) {
  return g0 + (gJ - gJm1) / mlmc_level_probability(J, j_max);
}

Vector mlmc_unbiased(const BiasedEstimator& est, double sigma_hat, Rng& rng,
                     const MlmcOptions& opts, int* level) {
  require(sigma_hat > 0.0, "sigma_hat must be positive");
  const Vector g0 = est(mlmc_level_target(0, sigma_hat), rng);
  const int J = mlmc_draw_level(rng, opts.j_max);
  const Vector gJ = est(mlmc_level_target(J, sigma_hat), rng);
  const Vector gJm1 = est(mlmc_level_target(J - 1, sigma_hat), rng);
  if (level) *level = J;
  return mlmc_combine(g0, gJ, gJm1, J, opts.j_max);
}

// --------------------------------------------------------- phase pipeline

PhasePipeline::PhasePipeline(const PotentialModel& model, PipelineOptions opts,
                             std::uint64_t phase_seed)
    : model_(model), opts_(opts), phase_rng_(Rng(phase_seed).split(Stream::Phase)) {
  const auto& c = model.constants();
  require(c.L > 0.0, "phase pipeline needs the smoothness constant L");
  require(c.M > 0.0, "phase pipeline needs the gradient bound M");
  require(c.noise_sigma >= 0.0, "phase pipeline needs sigma");
  require(opts_.jordan_success_prob > 0.0 && opts_.jordan_success_prob <= 1.0,
          "jordan success probability must lie in (0, 1]");
  if (opts_.log_factor <= 0.0) opts_.log_factor = default_log_factor(c.d);
}

const PipelineRunPlan& PhasePipeline::plan(double s) {
  auto it = plans_.find(s);
  if (it != plans_.end()) return it->second;
  require(s > 0.0, "accuracy target must be positive");
  const auto& c = model_.constants();
  const int d = c.d;
  const double C = opts_.jordan_constant;
  // Per-coordinate Jordan error C sqrt(d eps' beta) = s / (2 sqrt d), so the norm is <= s/2.
  const double eps_prime = s * s / (4.0 * C * C * d * d * c.L);

  PipelineRunPlan p;
  p.s = s;
  const Vector zero = Vector::Zero(d);
  if (opts_.mode == JordanMode::Statevector) {
    p.grid = build_grid(d, eps_prime, c.M, c.L, zero, opts_.qubit_budget);
    p.statevector = true;
  } else {
    p.grid = build_grid(d, eps_prime, c.M, c.L, zero, kUnlimitedQubits);
    p.statevector = opts_.mode == JordanMode::Auto && d * p.grid.bits_b <= opts_.qubit_budget;
  }
  p.t = p.grid.N() / (2.0 * c.M * p.grid.l);
  p.sigma_x = c.noise_sigma * p.grid.l * std::sqrt(static_cast<double>(d));
  p.eps_phase = std::min(0.5, 1.0 / p.grid.N0());
  p.charge = phase_oracle_cost(p.t, p.sigma_x, p.eps_phase, {opts_.c_q, opts_.log_factor});
  p.T = opts_.chernoff_repetitions
            ? chernoff_median_repetitions(c.M, s, run_success_probability())
            : median_repetitions(c.M, s);
  if (opts_.odd_repetitions && p.T % 2 == 0) ++p.T;
  return plans_.emplace(s, p).first->second;
}

double PhasePipeline::run_success_probability() const {
  const double phase_fail = opts_.retry_phase_failure ? 1.0 / 81.0 : 1.0 / 9.0;
  return opts_.jordan_success_prob * (1.0 - phase_fail);
}

Vector PhasePipeline::single_run(const Vector& x, double s, QueryLedger& ledger, Rng& rng) {
  return run_at(x, model_.gradient(x), s, ledger, rng);
}

Vector PhasePipeline::run_at(const Vector& x, const Vector& g, double s, QueryLedger& ledger,
                             Rng& rng) {
  const PipelineRunPlan& p = plan(s);
  const double M = model_.constants().M;
  const int d = model_.dim();

  auto attempt = [&]() {
    ledger.charge_eval_quantum(p.charge);
    const bool failed = phase_rng_.uniform_int(0, 8) == 0;
    if (failed) ++phase_failures_;
    return failed;
  };
  bool failed = attempt();
  if (failed && opts_.retry_phase_failure) failed = attempt();
  if (failed) {
    ++corrupted_;
    return g + M * rng.unit_ball(d);
  }
  if (p.statevector) {
    GridSpec grid = p.grid;
    grid.x0 = x;
    return jordan_gradient([&](const Vector& y) { return model_.value(y); }, grid, rng);
  }
  if (rng.uniform() < opts_.jordan_success_prob) return g + (s / 2.0) * rng.unit_ball(d);
  ++corrupted_;
  return g + M * rng.unit_ball(d);
}

Vector PhasePipeline::biased(const Vector& x, double s, QueryLedger& ledger, Rng& rng) {
  const PipelineRunPlan& p = plan(s);
  const Vector g = model_.gradient(x);
  if (!p.statevector) return contract_median(g, s, ledger, rng);
  return robust_median_gradient([&]() { return run_at(x, g, s, ledger, rng); }, p.T,
                                model_.constants().M);
}

// Same draws as T calls of run_at in contract mode, without per-run allocation.
Vector PhasePipeline::contract_median(const Vector& g, double s, QueryLedger& ledger, Rng& rng) {
  const PipelineRunPlan& p = plan(s);
  const double M = model_.constants().M;
  const int d = model_.dim();
  const int T = p.T;
  if (d == 1 && s / 2.0 < M) return contract_median_1d(g, s, ledger, rng);
  buffer_.resize(static_cast<std::size_t>(d) * T);
  std::vector<double> dir(d);
  std::uint64_t attempts = 0;
  for (int t = 0; t < T; ++t) {
    ++attempts;
    bool failed = phase_rng_.uniform_int(0, 8) == 0;
    if (failed) ++phase_failures_;
    if (failed && opts_.retry_phase_failure) {
      ++attempts;
      failed = phase_rng_.uniform_int(0, 8) == 0;
      if (failed) ++phase_failures_;
    }
    if (!failed && rng.uniform() >= opts_.jordan_success_prob) failed = true;
    double radius = s / 2.0;
    if (failed) {
      ++corrupted_;
      radius = M;
    }
    // Uniform point in the radius ball.
    if (d <= 3) {
      // Rejection from the cube accepts with probability >= pi/6.
      double n2 = 2.0;
      while (n2 > 1.0) {
        n2 = 0.0;
        for (int i = 0; i < d; ++i) {
          dir[i] = 2.0 * rng.uniform() - 1.0;
          n2 += dir[i] * dir[i];
        }
      }
      for (int i = 0; i < d; ++i) dir[i] *= radius;
    } else {
      double n2 = 0.0;
      while (n2 == 0.0) {
        n2 = 0.0;
        for (int i = 0; i < d; ++i) {
          dir[i] = rng.normal();
          n2 += dir[i] * dir[i];
        }
      }
      const double scale = radius * std::pow(rng.uniform(), 1.0 / d) / std::sqrt(n2);
      for (int i = 0; i < d; ++i) dir[i] *= scale;
    }
    for (int i = 0; i < d; ++i) buffer_[static_cast<std::size_t>(i) * T + t] = g[i] + dir[i];
  }
  ledger.charge_eval_quantum(attempts * p.charge);
  Vector med(d);
  const int k = (T - 1) / 2;
  for (int i = 0; i < d; ++i) {
    auto first = buffer_.begin() + static_cast<std::ptrdiff_t>(i) * T;
    std::nth_element(first, first + k, first + T);
    med[i] = first[k];
  }
  if (med.norm() > M) return Vector::Zero(d);
  return med;
}

// In one dimension the median of the T runs is sampled exactly from its order-statistic
// law: run categories are binomial counts, a corrupted value lands inside [-s/2, s/2]
// with probability s/(2M) and is then uniform there like a good value, and the k-th of
// m uniforms on an interval is a Beta(k, m - k + 1) point of it.
Vector PhasePipeline::contract_median_1d(const Vector& g, double s, QueryLedger& ledger,
                                         Rng& rng) {
  const PipelineRunPlan& p = plan(s);
  const double M = model_.constants().M;
  const std::int64_t T = p.T;
  auto binomial = [](Rng& r, std::int64_t n, double q) {
    if (n <= 0 || q <= 0.0) return std::int64_t{0};
    if (q >= 1.0) return n;
    return std::binomial_distribution<std::int64_t>(n, q)(r.engine());
  };
  auto beta = [&](std::int64_t a, std::int64_t b) {
    const double x = std::gamma_distribution<double>(static_cast<double>(a))(rng.engine());
    const double y = std::gamma_distribution<double>(static_cast<double>(b))(rng.engine());
    return x / (x + y);
  };

  const std::int64_t first_fail = binomial(phase_rng_, T, 1.0 / 9.0);
  std::int64_t phase_bad = first_fail;
  std::uint64_t attempts = static_cast<std::uint64_t>(T);
  phase_failures_ += static_cast<std::uint64_t>(first_fail);
  if (opts_.retry_phase_failure) {
    attempts += static_cast<std::uint64_t>(first_fail);
    phase_bad = binomial(phase_rng_, first_fail, 1.0 / 9.0);
    phase_failures_ += static_cast<std::uint64_t>(phase_bad);
  }
  ledger.charge_eval_quantum(attempts * p.charge);
  const std::int64_t bad = phase_bad + binomial(rng, T - phase_bad, 1.0 - opts_.jordan_success_prob);
  corrupted_ += static_cast<std::uint64_t>(bad);

  const double h = s / 2.0;
  const std::int64_t inside = (T - bad) + binomial(rng, bad, h / M);
  const std::int64_t outside = T - inside;
  const std::int64_t below = binomial(rng, outside, 0.5);
  const std::int64_t above = outside - below;
  const std::int64_t j = (T - 1) / 2 + 1;  // rank of the lower median
  double offset;
  if (j <= below) {
    offset = -M + (M - h) * beta(j, below - j + 1);
  } else if (j <= below + inside) {
    const std::int64_t jj = j - below;
    offset = -h + 2.0 * h * beta(jj, inside - jj + 1);
  } else {
    const std::int64_t jj = j - below - inside;
    offset = h + (M - h) * beta(jj, above - jj + 1);
  }
  Vector med = g;
  med[0] += offset;
  if (med.norm() > M) return Vector::Zero(1);
  return med;
}

Vector PhasePipeline::unbiased(const Vector& x, double sigma_hat, QueryLedger& ledger, Rng& rng) {
  return mlmc_unbiased([&](double s, Rng& r) { return biased(x, s, ledger, r); }, sigma_hat, rng,
                       opts_.mlmc);
}

Vector single_sample_gradient(const PotentialModel& model, const Vector& x, QueryLedger& ledger,
                              Rng& rng, double c_q, double log_factor) {
  const double lf = log_factor > 0.0 ? log_factor : default_log_factor(model.dim());
  ledger.charge_eval_quantum(static_cast<std::uint64_t>(std::ceil(c_q * lf)));
  return stochastic_gradient(model, x, {rng.next_u64(), SeedPurpose::NoiseRealization});
}

GradEstimate phase_pipeline_gradient(const PotentialModel& model, const Vector& x,
                                     double sigma_hat, QueryLedger& ledger, Rng& rng,
                                     const PipelineOptions& opts) {
  require(sigma_hat > 0.0, "sigma_hat must be positive");
  require(x.size() == model.dim(), "dimension mismatch");
  GradEstimate out;
  out.ledger_delta.set_phase(ledger.phase());
  if (sigma_hat >= model.constants().noise_sigma) {
    out.g = single_sample_gradient(model, x, out.ledger_delta, rng, opts.c_q, opts.log_factor);
  } else {
    PhasePipeline pipe(model, opts, rng.next_u64());
    out.g = pipe.unbiased(x, sigma_hat, out.ledger_delta, rng);
  }
  out.sigma_hat_sq = sigma_hat * sigma_hat;
  out.bias = BiasFlag::Unbiased;
  ledger.merge(out.ledger_delta);
  return out;
}

// ------------------------------------------------------------ robust estimator

ComponentJordan model_component_jordan(const PotentialModel& model, double eps,
                                       double success_prob) {
  require(eps > 0.0, "eps must be positive");
  require(success_prob > 0.0 && success_prob <= 1.0, "success probability must lie in (0, 1]");
  const double M = model.constants().M;
  const int d = model.dim();
  ComponentJordan cj;
  cj.run = [&model, eps, success_prob, M, d](std::uint64_t xi, const Vector& x, Rng& rng) {
    const Vector g = stochastic_gradient(model, x, {xi, SeedPurpose::NoiseRealization});
    if (rng.uniform() < success_prob) return Vector(g + (eps / 8.0) * rng.unit_ball(d));
    return Vector(g + M * rng.unit_ball(d));
  };
  cj.extra_variance = (1.0 - success_prob) * M * M;
  return cj;
}

RobustGradParams robust_grad_params(int d, double L, double sigma, double M, double eps, double beta_constant) {
  require(eps > 0.0, "eps must be positive");
  RobustGradParams p;
  p.beta = beta_constant * 164.0 * L * sigma * sigma / (eps * eps);
  p.D = 40.0 * sigma * sigma / eps;
  const double d3 = static_cast<double>(d) * d * d;
  p.eps_prime = p.beta > 0.0 ? eps * eps / (p.beta * p.beta * d3 * 12000.0 * 12000.0) : 0.0;
  p.M = M;
  return p;
}

RobustGradResult quantum_stochastic_gradient(const ComponentJordan& source,
                                       const StochasticProblem& problem, const Vector& x,
                                       double eps, QueryLedger& ledger, Rng& rng,
                                       const RobustGradOptions& opts, const Vector* exact_gradient) {
  require(eps > 0.0, "eps must be positive");
  require(problem.sigma >= eps, "requires sigma >= eps");
  require(x.size() == problem.d, "dimension mismatch");
  require(static_cast<bool>(source.run), "component source is required");

  RobustGradResult res;
  res.params = robust_grad_params(problem.d, problem.L, problem.sigma, problem.M, eps,
                           opts.beta_constant);
  const double D = opts.clip_D.value_or(res.params.D);

  Vector s = source.run(rng.next_u64(), x, rng);
  ledger.charge_eval_quantum(source.queries_per_run);
  if (exact_gradient) {
    const double radius = 2.0 * problem.sigma;
    res.anchor_flagged = (s - *exact_gradient).norm() > radius;
    if (opts.anchor == AnchorPolicy::RedrawWhenDetectable) {
      while ((s - *exact_gradient).norm() > radius && res.anchor_draws < opts.max_anchor_draws) {
        s = source.run(rng.next_u64(), x, rng);
        ledger.charge_eval_quantum(source.queries_per_run);
        ++res.anchor_draws;
      }
    }
  }

  QmeRequest req;
  req.d = problem.d;
  req.var_bound = opts.var_bound.value_or(10.0 * problem.sigma * problem.sigma + 3.0 * eps * eps +
                                          source.extra_variance);
  req.sigma_hat_sq = opts.delta * (eps / 4.0) * (eps / 4.0);
  req.c_q = opts.c_q;
  req.log_factor = opts.log_factor > 0.0 ? opts.log_factor : default_log_factor(problem.d);
  req.kind = OracleKind::Evaluation;
  req.queries_per_sample = source.queries_per_run;
  req.max_draws = opts.max_draws;
  std::uint64_t clipped = 0;
  req.sample_source = [&](Rng& r) -> Vector {
    Vector g = source.run(r.next_u64(), x, r);
    if ((g - s).norm() <= D) return g;
    ++clipped;
    return s;
  };
  res.v = quantum_mean_estimate(req, ledger, rng);
  res.clipped = clipped;
  res.draws = qme_batch_size(req.var_bound, req.sigma_hat_sq);
  return res;
}

RobustGradResult quantum_stochastic_gradient(const PotentialModel& model, const Vector& x, double eps,
                                       QueryLedger& ledger, Rng& rng, const RobustGradOptions& opts) {
  const auto& c = model.constants();
  const StochasticProblem problem{c.d, c.L, c.noise_sigma, c.M};
  const ComponentJordan source = model_component_jordan(model, eps);
  const Vector g = model.gradient(x);
  return quantum_stochastic_gradient(source, problem, x, eps, ledger, rng, opts, &g);
}

Vector robust_mlmc_gradient(const PotentialModel& model, const Vector& x, double sigma_hat,
                          QueryLedger& ledger, Rng& rng, const RobustGradOptions& opts,
                          const MlmcOptions& mlmc) {
  const double M = model.constants().M;
  auto biased = [&](double s, Rng& r) {
    int T = median_repetitions(M, s);
    if (T % 2 == 0) ++T;
    return robust_median_gradient(
        [&]() { return quantum_stochastic_gradient(model, x, s / 2.0, ledger, r, opts).v; }, T,
        M);
  };
  return mlmc_unbiased(biased, sigma_hat, rng, mlmc);
}

}  // namespace qmcmc
