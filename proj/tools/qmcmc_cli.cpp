#include "qmcmc/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> workers;
};

void add_flags(CLI::App* sub, Args& a) {
  sub->add_option("--config", a.config, "experiment config file");
  sub->add_option("--seed", a.seed, "seed (replaces the config's seed list)");
  sub->add_option("--out", a.out, "output directory (default: config output, then $QMCMC_OUT_DIR)");
  sub->add_option("--workers", a.workers, "worker threads")->check(CLI::PositiveNumber);
}

// allowed: experiment kinds the subcommand may run; the first is used when the config names none.
int run(const Args& a, std::initializer_list<const char*> allowed) {
  using namespace qmcmc;
  try {
    ExperimentConfig cfg = a.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(a.config);
    if (!cfg.has("experiment")) cfg.set("experiment", *allowed.begin());
    const std::string exp = cfg.get_string("experiment");
    bool ok = false;
    for (const char* e : allowed) ok = ok || exp == e;
    if (!ok) throw std::invalid_argument("experiment: '" + exp + "' does not match this subcommand");
    RunContext ctx;
    ctx.seed = a.seed;
    ctx.workers = a.workers;
    ctx.out_dir = a.out;
    const auto out = exp == "table1" ? reproduce_table1(cfg, ctx) : run_experiment(cfg, ctx);
    std::cout << out.csv_path << "\n" << out.json_path << "\n";
    return 0;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-accelerated MCMC emulation harness"};
  app.require_subcommand(1);
  Args a;
  struct Cmd {
    const char* name;
    const char* help;
    std::initializer_list<const char*> kinds;
  };
  const Cmd cmds[] = {
      {"run-sampler", "run a sampler or a scaling sweep", {"sampler", "scaling_sweep"}},
      {"run-gradest", "run a gradient-estimator experiment", {"gradest"}},
      {"run-jordan", "run statevector Jordan trials", {"jordan"}},
      {"run-optimize", "run the approximately-convex optimizer", {"optimize"}},
      {"reproduce-table", "ledger totals and fitted exponents per schedule", {"table1"}},
  };
  int code = 0;
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_flags(sub, a);
    sub->callback([&a, &code, kinds = c.kinds] { code = run(a, kinds); });
  }
  CLI11_PARSE(app, argc, argv);
  return code;
}
