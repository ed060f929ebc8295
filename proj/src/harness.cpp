#include "qmcmc/harness.hpp"

#include "qmcmc/gradest.hpp"
#include "qmcmc/jordan.hpp"
#include "qmcmc/metrics.hpp"
#include "qmcmc/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#ifndef QMCMC_BUILD_ID
#define QMCMC_BUILD_ID "unknown"
#endif

namespace qmcmc {

std::string build_id() { return QMCMC_BUILD_ID; }

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void CsvTable::add(std::vector<std::string> row) {
  require(row.size() == header.size(), "CSV row width does not match the header");
  rows.push_back(std::move(row));
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt_int(std::int64_t v) { return std::to_string(v); }

}  // namespace

std::string CsvTable::to_string() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += csv_field(r[i]);
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

std::string resolve_out_dir(const ExperimentConfig& cfg, const RunContext& ctx) {
  if (!ctx.out_dir.empty()) return ctx.out_dir;
  if (cfg.has("output")) return cfg.get_string("output");
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "results";
}

ModelPtr make_model(const ExperimentConfig& cfg, std::optional<int> n, std::optional<int> d) {
  const std::string kind = cfg.get_string("model.kind");
  const int dim = d.value_or(static_cast<int>(cfg.get_int("model.d")));
  const double radius = cfg.get_real("model.domain_radius");
  const double noise = cfg.get_real("model.noise_amplitude");
  if (kind == "quadratic") {
    QuadraticSpec s;
    s.d = dim;
    s.n = n.value_or(static_cast<int>(cfg.get_int("model.n")));
    s.center_radius = cfg.get_real("model.center_radius");
    s.curvature_spread = cfg.get_real("model.curvature_spread");
    s.noise_amplitude = noise;
    s.domain_scale = cfg.get_real("model.domain_scale");
    s.seed = static_cast<std::uint64_t>(cfg.get_int("model.seed"));
    return make_finite_sum_quadratic(s);
  }
  if (kind == "mixture") {
    return make_gaussian_mixture(dim, cfg.get_real("model.separation"), cfg.get_real("model.scale"),
                                 noise, radius > 0.0 ? radius : 10.0);
  }
  if (kind == "perturbed") {
    return make_perturbed_strongly_convex(dim, cfg.get_real("model.mu"),
                                          cfg.get_real("model.amplitude"),
                                          cfg.get_real("model.frequency"), noise, radius);
  }
  throw std::invalid_argument("model.kind: unsupported value '" + kind + "'");
}

PlanOptions plan_options(const ExperimentConfig& cfg) {
  PlanOptions o;
  o.multipliers = cfg.constants();
  o.kl0 = cfg.get_real("plan.kl0");
  return o;
}

ProviderOptions provider_options(const ExperimentConfig& cfg) {
  ProviderOptions o;
  o.qme.c_q = cfg.get_real("qme.c_q");
  o.qme.log_factor = cfg.get_real("qme.log_factor");
  o.pipeline.c_q = o.qme.c_q;
  o.pipeline.log_factor = o.qme.log_factor;
  const std::string mode = cfg.get_string("pipeline.mode");
  o.pipeline.mode = mode == "auto"          ? JordanMode::Auto
                    : mode == "statevector" ? JordanMode::Statevector
                                            : JordanMode::Contract;
  o.pipeline.qubit_budget = static_cast<int>(cfg.get_int("pipeline.qubit_budget"));
  o.pipeline.jordan_constant = cfg.get_real("pipeline.jordan_constant");
  o.regime = cfg.get_string("zeroth.regime") == "smoothness" ? ZerothOrderRegime::Smoothness
                                                             : ZerothOrderRegime::FullSmoothness;
  o.robust.c_q = o.qme.c_q;
  o.robust.log_factor = o.qme.log_factor;
  return o;
}

InitMode parse_init(const std::string& s) {
  if (s == "star") return InitMode::Star;
  if (s == "zero") return InitMode::Zero;
  if (s == "gaussian") return InitMode::Gaussian;
  throw std::invalid_argument("init: unsupported value '" + s + "'");
}

Vector initial_point(const PotentialModel& model, InitMode mode, Rng& rng) {
  switch (mode) {
    case InitMode::Star: return default_initial_point(model);
    case InitMode::Zero: return Vector::Zero(model.dim());
    case InitMode::Gaussian:
      return default_initial_point(model) +
             rng.normal_vector(model.dim()) / std::sqrt(model.constants().L);
  }
  return default_initial_point(model);
}

LedgerCounters ledger_counters(const QueryLedger& ledger, const std::string& phase) {
  if (phase.empty()) return ledger.totals();
  auto it = ledger.phases().find(phase);
  return it == ledger.phases().end() ? LedgerCounters{} : it->second;
}

namespace {

LedgerCost mean_cost(const std::vector<QueryLedger>& ledgers, const std::string& phase) {
  LedgerCost c;
  if (ledgers.empty()) return c;
  for (const auto& l : ledgers) {
    const auto t = ledger_counters(l, phase);
    c.grad_c += static_cast<double>(t.grad_c);
    c.grad_q += static_cast<double>(t.grad_q);
    c.eval_c += static_cast<double>(t.eval_c);
    c.eval_q += static_cast<double>(t.eval_q);
  }
  const double n = static_cast<double>(ledgers.size());
  c.grad_c /= n;
  c.grad_q /= n;
  c.eval_c /= n;
  c.eval_q /= n;
  return c;
}

}  // namespace

ChainRunResult run_sampler_chains(const ModelPtr& model, const HyperParams& hp,
                                  const ProviderOptions& popts, int chains, std::uint64_t seed,
                                  int workers, InitMode init, const RunOptions& run) {
  auto body = [&](int, QueryLedger& ledger, Rng& rng) {
    Rng init_rng = rng.split(Stream::Init);
    const Vector x0 = initial_point(*model, init, init_rng);
    return run_schedule(model, hp, x0, ledger, rng, popts, run);
  };
  ChainRunResult r;
  r.batch = run_chains(chains, seed, workers, body);
  r.cost = mean_cost(r.batch.ledgers, "");
  r.cost_estimate = mean_cost(r.batch.ledgers, kPhaseEstimate);
  return r;
}

double scaling_queries(Schedule s, const LedgerCost& c) {
  return is_zeroth_order(s) ? c.evaluation() : c.gradient();
}

namespace {

std::vector<std::string> with_stamp(const std::vector<std::string>& cols) {
  std::vector<std::string> h = {"config_hash", "seed", "build_id"};
  h.insert(h.end(), cols.begin(), cols.end());
  return h;
}

struct Stamp {
  std::string hash;
  std::string bid;
  std::vector<std::string> row(std::uint64_t seed, std::vector<std::string> rest) const {
    std::vector<std::string> r = {hash, std::to_string(seed), bid};
    r.insert(r.end(), rest.begin(), rest.end());
    return r;
  }
};

std::vector<Vector> gaussian_draws(const Vector& mean, const Matrix& cov, int n, Rng& rng) {
  const Eigen::LLT<Matrix> llt(cov);
  const Matrix Lc = llt.matrixL();
  std::vector<Vector> out;
  for (int i = 0; i < n; ++i) out.push_back(mean + Lc * rng.normal_vector(mean.size()));
  return out;
}

int workers_of(const ExperimentConfig& cfg, const RunContext& ctx) {
  return ctx.workers.value_or(static_cast<int>(cfg.get_int("workers")));
}

std::vector<std::uint64_t> seeds_of(const ExperimentConfig& cfg, const RunContext& ctx) {
  if (ctx.seed) return {*ctx.seed};
  return cfg.get_seed_list("seeds");
}

nlohmann::json ledger_entry(std::uint64_t seed, const QueryLedger& l) {
  return {{"seed", seed}, {"ledger", l.to_json()}, {"emulation_draws", l.emulation_draws()}};
}

// ------------------------------------------------------------------- experiments

void sampler_experiment(const ExperimentConfig& cfg, const RunContext& ctx, const Stamp& st,
                        ExperimentOutput& out) {
  out.table.header = with_stamp({"schedule", "model", "d", "n", "eps", "chains", "eta", "S", "T",
                                 "K", "b", "m", "sigma_hat_sq", "w2_fit", "w2_emp", "w2_ci_low",
                                 "w2_ci_high", "kl_fit", "tv", "grad_c", "grad_q", "eval_c",
                                 "eval_q"});
  const ModelPtr model = make_model(cfg);
  const Schedule sched = parse_schedule(cfg.get_string("schedule"));
  const double eps = cfg.get_real("eps");
  const HyperParams hp = plan_hyperparams(sched, *model, eps, plan_options(cfg));
  const ProviderOptions popts = provider_options(cfg);
  const int chains = static_cast<int>(cfg.get_int("chains"));
  RunOptions run;
  run.record_every = 0;
  for (std::uint64_t seed : seeds_of(cfg, ctx)) {
    auto res = run_sampler_chains(model, hp, popts, chains, seed, workers_of(cfg, ctx),
                                  parse_init(cfg.get_string("init")), run);
    std::vector<Vector> ends;
    for (const auto& t : res.batch.chains) ends.push_back(t.final_x);
    double w2_fit = NAN, w2_emp = NAN, lo = NAN, hi = NAN, kl = NAN, tv = NAN;
    if (auto target = model->gaussian_target(); target && ends.size() >= 2) {
      w2_fit = w2_gaussian_exact(sample_moments(ends).mean, sample_moments(ends).cov,
                                 target->first, target->second);
      kl = gaussian_fit_kl(ends, target->first, target->second);
      const auto npts = std::min<std::size_t>(ends.size(), cfg.get_int("metrics.w2_max_points"));
      if (npts >= 100) {
        Rng trial = Rng(seed).split(Stream::Trial);
        std::vector<Vector> a(ends.begin(), ends.begin() + npts);
        const auto b = gaussian_draws(target->first, target->second, static_cast<int>(npts), trial);
        EmpiricalW2Options wo;
        wo.bootstrap = static_cast<int>(cfg.get_int("metrics.bootstrap"));
        wo.seed = seed;
        const auto rep = empirical_w2(a, b, wo);
        w2_emp = rep.value;
        lo = rep.ci_low;
        hi = rep.ci_high;
      }
    }
    if (const auto* mix = dynamic_cast<const GaussianMixture*>(model.get());
        mix && model->dim() == 1) {
      std::vector<double> xs;
      for (const auto& e : ends) xs.push_back(e(0));
      const double span = mix->separation() + 6.0 * mix->scale();
      tv = histogram_tv(xs, [mix](double t) { return mix->first_coordinate_cdf(t); }, -span, span,
                        static_cast<int>(cfg.get_int("metrics.tv_bins")))
               .value;
    }
    const auto& c = res.cost;
    out.table.add(st.row(seed, {schedule_name(sched), model->kind_name(), fmt_int(model->dim()),
                                fmt_int(model->components()), format_real(eps), fmt_int(chains),
                                format_real(hp.eta), fmt_int(hp.S), fmt_int(hp.T), fmt_int(hp.K),
                                fmt_int(hp.b), fmt_int(hp.m), format_real(hp.sigma_hat_sq),
                                format_real(w2_fit), format_real(w2_emp), format_real(lo),
                                format_real(hi), format_real(kl), format_real(tv),
                                format_real(c.grad_c), format_real(c.grad_q),
                                format_real(c.eval_c), format_real(c.eval_q)}));
    out.ledger["runs"].push_back(ledger_entry(seed, res.batch.total));
  }
}

void gradest_experiment(const ExperimentConfig& cfg, const RunContext& ctx, const Stamp& st,
                        ExperimentOutput& out) {
  out.table.header = with_stamp({"trial", "method", "error_norm", "sq_error", "grad_c", "grad_q",
                                 "eval_c", "eval_q"});
  const ModelPtr model = make_model(cfg);
  const std::string method = cfg.get_string("gradest.method");
  const int trials = static_cast<int>(cfg.get_int("gradest.trials"));
  const Vector x = default_initial_point(*model) +
                   cfg.get_real("gradest.offset") * Vector::Ones(model->dim());
  const Vector truth = grad_exact(*model, x);
  const ProviderOptions popts = provider_options(cfg);
  for (std::uint64_t seed : seeds_of(cfg, ctx)) {
    QueryLedger total;
    const Rng root(seed);
    PhasePipeline pipe(*model, popts.pipeline, root.split(Stream::Phase).seed());
    for (int t = 0; t < trials; ++t) {
      Rng rng = root.split(Stream::Trial, static_cast<std::uint64_t>(t));
      QueryLedger l;
      Vector g;
      if (method == "smoothing") {
        g = gaussian_smoothing_gradient(*model, x, cfg.get_real("gradest.nu"),
                                        static_cast<int>(cfg.get_int("gradest.b")), l, rng)
                .g;
      } else if (method == "pipeline") {
        g = pipe.unbiased(x, cfg.get_real("gradest.sigma_hat"), l, rng);
      } else {
        g = quantum_stochastic_gradient(*model, x, cfg.get_real("gradest.eps"), l, rng,
                                        popts.robust)
                .v;
      }
      const double e2 = (g - truth).squaredNorm();
      const auto c = l.totals();
      out.table.add(st.row(seed, {fmt_int(t), method, format_real(std::sqrt(e2)), format_real(e2),
                                  fmt_int(c.grad_c), fmt_int(c.grad_q), fmt_int(c.eval_c),
                                  fmt_int(c.eval_q)}));
      total.merge(l);
    }
    out.ledger["runs"].push_back(ledger_entry(seed, total));
  }
}

void jordan_experiment(const ExperimentConfig& cfg, const RunContext& ctx, const Stamp& st,
                       ExperimentOutput& out) {
  out.table.header = with_stamp({"trial", "coordinate", "estimate", "error", "success"});
  const ModelPtr model = make_model(cfg);
  const int d = model->dim();
  const Vector x0 = default_initial_point(*model) + cfg.get_real("jordan.offset") * Vector::Ones(d);
  const Vector truth = grad_exact(*model, x0);
  const double Lj = cfg.get_real("jordan.L") > 0.0 ? cfg.get_real("jordan.L")
                                                  : 2.0 * truth.norm() + 1.0;
  const GridSpec spec = build_grid(d, cfg.get_real("jordan.eps"), Lj, model->constants().L, x0,
                                   static_cast<int>(cfg.get_int("jordan.qubit_budget")));
  const double bound = spec.error_bound(cfg.get_real("pipeline.jordan_constant"));
  const int trials = static_cast<int>(cfg.get_int("jordan.trials"));
  auto f = [&](const Vector& y) { return model->value(y); };
  for (std::uint64_t seed : seeds_of(cfg, ctx)) {
    const Rng root(seed);
    int ok = 0;
    for (int t = 0; t < trials; ++t) {
      Rng rng = root.split(Stream::Trial, static_cast<std::uint64_t>(t));
      const Vector g = jordan_gradient(f, spec, rng);
      bool all = true;
      for (int j = 0; j < d; ++j) {
        const double err = std::abs(g(j) - truth(j));
        const bool success = err <= bound;
        all = all && success;
        out.table.add(st.row(seed, {fmt_int(t), fmt_int(j), format_real(g(j)), format_real(err),
                                    success ? "1" : "0"}));
      }
      ok += all ? 1 : 0;
    }
    out.ledger["runs"].push_back({{"seed", seed},
                                  {"grid", {{"bits_b", spec.bits_b}, {"bits_b0", spec.bits_b0},
                                            {"l", spec.l}, {"L", spec.L_jordan}}},
                                  {"error_bound", bound},
                                  {"success_rate", static_cast<double>(ok) / trials}});
  }
}

void optimize_experiment(const ExperimentConfig& cfg, const RunContext& ctx, const Stamp& st,
                         ExperimentOutput& out) {
  out.table.header = with_stamp({"chain", "x", "f", "observed_f", "gap", "success", "best"});
  const ModelPtr model = make_model(cfg);
  OptimizeConfig oc;
  oc.eps = cfg.get_real("optimize.eps");
  oc.beta_constant = cfg.get_real("optimize.beta_constant");
  oc.repeat_count = static_cast<int>(cfg.get_int("optimize.repeat_count"));
  if (cfg.get_real("optimize.eta") > 0.0) oc.eta = cfg.get_real("optimize.eta");
  if (cfg.get_int("optimize.steps") > 0) oc.steps = cfg.get_int("optimize.steps");
  if (cfg.get_real("optimize.sigma_hat_sq") > 0.0)
    oc.sigma_hat_sq = cfg.get_real("optimize.sigma_hat_sq");
  const double M = std::max(1.0, model->constants().M);
  oc.smoothing_v = cfg.get_real("optimize.v_scale") * oc.eps / (M * model->dim());
  oc.allow_v_violation = cfg.get_bool("optimize.allow_v_violation");
  oc.init_radius = cfg.get_real("optimize.init_radius");
  oc.tv_target = cfg.get_real("optimize.tv_target");
  oc.c_q = cfg.get_real("qme.c_q");
  oc.log_factor = cfg.get_real("qme.log_factor");
  oc.workers = workers_of(cfg, ctx);
  for (std::uint64_t seed : seeds_of(cfg, ctx)) {
    QueryLedger ledger;
    Rng rng(seed);
    const auto res = approx_convex_minimize(*model, oc, ledger, rng);
    const auto& rep = res.report;
    for (std::size_t c = 0; c < rep.chain_x.size(); ++c) {
      std::string xs;
      for (int j = 0; j < model->dim(); ++j) xs += (j ? ";" : "") + format_real(rep.chain_x[c](j));
      const double gap = rep.chain_gap.empty() ? NAN : rep.chain_gap[c];
      out.table.add(st.row(seed, {fmt_int(static_cast<std::int64_t>(c)), xs,
                                  format_real(rep.chain_f[c]), format_real(rep.chain_observed[c]),
                                  format_real(gap), gap <= oc.eps ? "1" : "0",
                                  rep.chain_x[c] == res.x_best ? "1" : "0"}));
    }
    auto entry = ledger_entry(seed, ledger);
    entry["plan"] = rep.plan.to_json();
    entry["success_rate"] = rep.success_rate;
    entry["f_best"] = res.f_best;
    if (res.gap) entry["gap"] = *res.gap;
    out.ledger["runs"].push_back(entry);
  }
}

struct SweepSetting {
  ModelPtr model;
  double eps;
};

SweepSetting sweep_point(const ExperimentConfig& cfg, const std::string& param, double v) {
  if (param == "n") return {make_model(cfg, static_cast<int>(std::lround(v))), cfg.get_real("eps")};
  if (param == "d") return {make_model(cfg, std::nullopt, static_cast<int>(std::lround(v))),
                            cfg.get_real("eps")};
  return {make_model(cfg), v};
}

void sweep_experiment(const ExperimentConfig& cfg, const RunContext& ctx, const Stamp& st,
                      ExperimentOutput& out) {
  out.table.header = with_stamp({"row_type", "schedule", "param", "value", "queries", "grad_c",
                                 "grad_q", "eval_c", "eval_q", "slope", "intercept", "r2"});
  const Schedule sched = parse_schedule(cfg.get_string("schedule"));
  const std::string param = cfg.get_string("sweep.param");
  const std::string phase = cfg.get_string("sweep.phase") == "estimate" ? kPhaseEstimate : "";
  const int chains = static_cast<int>(cfg.get_int("chains"));
  const ProviderOptions popts = provider_options(cfg);
  RunOptions run;
  run.record_every = 0;
  for (std::uint64_t seed : seeds_of(cfg, ctx)) {
    std::vector<std::pair<double, double>> pts;
    nlohmann::json runs = nlohmann::json::array();
    for (double v : cfg.get_real_list("sweep.values")) {
      const auto sp = sweep_point(cfg, param, v);
      const HyperParams hp = plan_hyperparams(sched, *sp.model, sp.eps, plan_options(cfg));
      const auto res = run_sampler_chains(sp.model, hp, popts, chains, seed, workers_of(cfg, ctx),
                                          parse_init(cfg.get_string("init")), run);
      const LedgerCost c = phase.empty() ? res.cost : res.cost_estimate;
      const double q = scaling_queries(sched, c);
      pts.emplace_back(param == "eps" ? 1.0 / v : v, q);
      out.table.add(st.row(seed, {"point", schedule_name(sched), param, format_real(v),
                                  format_real(q), format_real(c.grad_c), format_real(c.grad_q),
                                  format_real(c.eval_c), format_real(c.eval_q), "", "", ""}));
      runs.push_back({{"value", v}, {"ledger", res.batch.total.to_json()}});
    }
    const auto fit = slope_fit(pts);
    out.table.add(st.row(seed, {"slope_fit", schedule_name(sched),
                                param == "eps" ? "inv_eps" : param, "", "", "", "", "", "",
                                format_real(fit.slope), format_real(fit.intercept),
                                format_real(fit.r2)}));
    out.ledger["runs"].push_back({{"seed", seed}, {"points", runs}, {"slope", fit.slope}});
  }
}

void table1_experiment(const ExperimentConfig& cfg, const RunContext& ctx, const Stamp& st,
                       ExperimentOutput& out) {
  out.table.header = with_stamp({"row_type", "schedule", "sweep", "value", "queries",
                                 "queries_estimate", "grad_c", "grad_q", "eval_c", "eval_q",
                                 "slope", "slope_estimate", "r2"});
  const int chains = static_cast<int>(cfg.get_int("table.chains"));
  const int d = static_cast<int>(cfg.get_int("table.d"));
  const ProviderOptions popts = provider_options(cfg);
  RunOptions run;
  run.record_every = 0;
  for (std::uint64_t seed : seeds_of(cfg, ctx)) {
    for (const auto& name : cfg.get_string_list("table.schedules")) {
      const Schedule sched = parse_schedule(name);
      auto sweep = [&](const std::string& label, const std::vector<double>& vals) {
        std::vector<std::pair<double, double>> pts, pts_est;
        for (double v : vals) {
          const int n = label == "n" ? static_cast<int>(std::lround(v))
                                     : static_cast<int>(cfg.get_int("table.n"));
          const double eps = label == "n" ? cfg.get_real("table.eps") : v;
          const ModelPtr model = make_model(cfg, n, d);
          const HyperParams hp = plan_hyperparams(sched, *model, eps, plan_options(cfg));
          const auto res = run_sampler_chains(model, hp, popts, chains, seed, workers_of(cfg, ctx),
                                              InitMode::Star, run);
          const double q = scaling_queries(sched, res.cost);
          const double qe = scaling_queries(sched, res.cost_estimate);
          const double x = label == "n" ? v : 1.0 / v;
          pts.emplace_back(x, q);
          if (qe > 0.0) pts_est.emplace_back(x, qe);
          const auto& c = res.cost;
          out.table.add(st.row(seed, {"point", name, label, format_real(v), format_real(q),
                                      format_real(qe), format_real(c.grad_c),
                                      format_real(c.grad_q), format_real(c.eval_c),
                                      format_real(c.eval_q), "", "", ""}));
        }
        const auto fit = slope_fit(pts);
        const double se = pts_est.size() >= 3 ? slope_fit(pts_est).slope : NAN;
        out.table.add(st.row(seed, {"slope_fit", name, label == "n" ? "n" : "inv_eps", "", "", "",
                                    "", "", "", "", format_real(fit.slope), format_real(se),
                                    format_real(fit.r2)}));
        out.ledger["slopes"][name][label] = {{"slope", fit.slope}, {"slope_estimate", se}};
      };
      std::vector<double> nv;
      for (auto n : cfg.get_int_list("table.n_values")) nv.push_back(static_cast<double>(n));
      // The zeroth-order schedules have no finite-sum structure, so there is no n-sweep.
      if (!is_zeroth_order(sched)) sweep("n", nv);
      sweep("eps", cfg.get_real_list("table.eps_values"));
    }
    out.ledger["runs"].push_back({{"seed", seed}});
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

ExperimentOutput dispatch(const ExperimentConfig& cfg, const RunContext& ctx,
                          const std::string& name) {
  cfg.validate();
  ExperimentOutput out;
  out.name = name;
  const Stamp st{cfg.hash(), build_id()};
  out.ledger = {{"experiment", name},
                {"config_hash", st.hash},
                {"build_id", st.bid},
                {"config", cfg.values()},
                {"runs", nlohmann::json::array()}};
  const std::string dir = resolve_out_dir(cfg, ctx);
  try {
    if (name == "sampler") sampler_experiment(cfg, ctx, st, out);
    else if (name == "gradest") gradest_experiment(cfg, ctx, st, out);
    else if (name == "jordan") jordan_experiment(cfg, ctx, st, out);
    else if (name == "optimize") optimize_experiment(cfg, ctx, st, out);
    else if (name == "scaling_sweep") sweep_experiment(cfg, ctx, st, out);
    else table1_experiment(cfg, ctx, st, out);
  } catch (...) {
    if (ctx.write_files && !out.table.rows.empty()) {
      std::filesystem::create_directories(dir);
      write_text(dir + "/" + name + ".partial.csv", out.table.to_string());
    }
    throw;
  }
  if (ctx.write_files) {
    std::filesystem::create_directories(dir);
    out.csv_path = dir + "/" + name + ".csv";
    out.json_path = dir + "/" + name + ".ledger.json";
    write_text(out.csv_path, out.table.to_string());
    write_text(out.json_path, out.ledger.dump(2) + "\n");
  }
  return out;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg, const RunContext& ctx) {
  cfg.validate();
  return dispatch(cfg, ctx, cfg.get_string("experiment"));
}

ExperimentOutput reproduce_table1(const ExperimentConfig& cfg, const RunContext& ctx) {
  return dispatch(cfg, ctx, "table1");
}

}  // namespace qmcmc
