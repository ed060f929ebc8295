#pragma once

#include "qmcmc/config.hpp"
#include "qmcmc/ledger.hpp"
#include "qmcmc/planner.hpp"
#include "qmcmc/potentials.hpp"
#include "qmcmc/samplers.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace qmcmc {

// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "QMCMC_OUT_DIR";

std::string build_id();

// "%.12g"; NaN prints as "nan".
std::string format_real(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  std::string to_string() const;
};

struct RunContext {
  std::optional<std::uint64_t> seed;  // replaces the config's seed list
  std::optional<int> workers;
  std::string out_dir;                // empty: config "output", then $QMCMC_OUT_DIR, then "results"
  bool write_files = true;
};

struct ExperimentOutput {
  std::string name;
  CsvTable table;
  nlohmann::json ledger;
  std::string csv_path;
  std::string json_path;
};

std::string resolve_out_dir(const ExperimentConfig& cfg, const RunContext& ctx);

// Validates, runs, and writes <out>/<experiment>.csv and <experiment>.ledger.json. On failure
// any rows produced so far go to <experiment>.partial.csv and the error propagates.
ExperimentOutput run_experiment(const ExperimentConfig& cfg, const RunContext& ctx = {});

// Ledger totals and fitted n- and eps-exponents for the configured schedules.
ExperimentOutput reproduce_table1(const ExperimentConfig& cfg, const RunContext& ctx = {});

// Model described by the model.* keys; n and d may be overridden for sweeps.
ModelPtr make_model(const ExperimentConfig& cfg, std::optional<int> n = std::nullopt,
                    std::optional<int> d = std::nullopt);

PlanOptions plan_options(const ExperimentConfig& cfg);
ProviderOptions provider_options(const ExperimentConfig& cfg);

enum class InitMode { Star, Zero, Gaussian };
InitMode parse_init(const std::string& s);
Vector initial_point(const PotentialModel& model, InitMode mode, Rng& rng);

// Mean per-chain ledger counters.
struct LedgerCost {
  double grad_c = 0.0, grad_q = 0.0, eval_c = 0.0, eval_q = 0.0;
  double gradient() const { return grad_c + grad_q; }
  double evaluation() const { return eval_c + eval_q; }
  double total() const { return gradient() + evaluation(); }
};

// Counters of one ledger, restricted to a phase label when one is given.
LedgerCounters ledger_counters(const QueryLedger& ledger, const std::string& phase = "");

struct ChainRunResult {
  ChainBatch batch;
  LedgerCost cost;            // all phases
  LedgerCost cost_estimate;   // estimate phase only
};

// Runs `chains` chains of the schedule and averages their ledgers.
ChainRunResult run_sampler_chains(const ModelPtr& model, const HyperParams& hp,
                                  const ProviderOptions& popts, int chains, std::uint64_t seed,
                                  int workers, InitMode init, const RunOptions& run = {});

// Queries counted for scaling: evaluations for zeroth-order schedules, gradients otherwise.
double scaling_queries(Schedule s, const LedgerCost& c);

}  // namespace qmcmc
