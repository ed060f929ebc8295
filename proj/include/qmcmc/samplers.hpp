#pragma once

#include "qmcmc/gradest.hpp"
#include "qmcmc/ledger.hpp"
#include "qmcmc/planner.hpp"
#include "qmcmc/potentials.hpp"
#include "qmcmc/rng.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace qmcmc {

struct ChainState {
  Vector x;
  Vector p;
  Vector anchor;            // x~ (SVRG) or x0 (CV)
  Vector anchor_full_grad;  // exact grad f at the anchor
  std::int64_t epoch_pos = 0;
  std::int64_t k = 0;
  std::uint64_t rng_stream = 0;
  bool anchor_set = false;
};

struct StepContext {
  std::int64_t k = 0;
  bool half_step = false;  // gradient at x_{k+1} inside the leapfrog update
};

struct QmeCost {
  double c_q = 1.0;
  double log_factor = 0.0;  // <= 0 selects default_log_factor(d)
  std::uint64_t max_draws = 50'000'000;
};

// Ledger phase labels used by all providers.
inline constexpr const char* kPhaseAnchor = "anchor";
inline constexpr const char* kPhaseEstimate = "estimate";

// Full gradient at x, charged as n classical gradient queries.
Vector full_gradient(const PotentialModel& model, const Vector& x, QueryLedger& ledger);

// Sets state.anchor = state.x and its exact full gradient.
void reset_anchor(ChainState& state, const PotentialModel& model, QueryLedger& ledger);

// k mod m == 0: full gradient and anchor reset. Otherwise mean estimation over the SVRG
// correction source with var_bound L^2 ||x - x~||^2 and target var_bound / b^2.
Vector qsvrg_gradient(ChainState& state, const PotentialModel& model, std::int64_t b,
                      std::int64_t m, QueryLedger& ledger, Rng& rng, const QmeCost& cost = {},
                      bool allow_refresh = true);

// Mean estimation over the control-variate source anchored at x0.
Vector qcv_gradient(ChainState& state, const PotentialModel& model, std::int64_t b,
                    QueryLedger& ledger, Rng& rng, const QmeCost& cost = {});

// Classical counterparts: average of B correction samples, 2B gradient queries.
Vector svrg_minibatch_gradient(ChainState& state, const PotentialModel& model, std::int64_t B,
                               std::int64_t m, QueryLedger& ledger, Rng& rng,
                               bool allow_refresh = true);
Vector cv_minibatch_gradient(ChainState& state, const PotentialModel& model, std::int64_t B,
                             QueryLedger& ledger, Rng& rng);
Vector minibatch_gradient(const PotentialModel& model, const Vector& x, std::int64_t B,
                          QueryLedger& ledger, Rng& rng);

class GradientProvider {
 public:
  virtual ~GradientProvider() = default;
  virtual void initialize(const Vector& x0, QueryLedger& ledger, Rng& rng);
  virtual Vector gradient(const Vector& x, const StepContext& ctx, QueryLedger& ledger,
                          Rng& rng) = 0;
  virtual std::string name() const = 0;
};

using ProviderFactory = std::function<std::unique_ptr<GradientProvider>(std::uint64_t seed)>;

enum class ZerothOrderRegime { FullSmoothness, Smoothness };

struct ProviderOptions {
  QmeCost qme;
  PipelineOptions pipeline;
  ZerothOrderRegime regime = ZerothOrderRegime::FullSmoothness;
  RobustGradOptions robust;
};

std::unique_ptr<GradientProvider> make_exact_provider(ModelPtr model);
// Provider implementing the gradient source of a schedule (quantum or classical).
ProviderFactory make_provider_factory(ModelPtr model, const HyperParams& hp,
                                      const ProviderOptions& opts = {});

struct RunOptions {
  std::int64_t record_every = 1;  // proposals (HMC) or steps (LMC); 0 keeps only the end
  double divergence_radius = 1e6;
};

struct Trajectory {
  std::vector<Vector> samples;
  std::vector<std::int64_t> steps;
  Vector final_x;
  Vector final_p;
  std::int64_t total_steps = 0;
};

// S velocity-Verlet steps with two provider calls per step.
void leapfrog(GradientProvider& provider, Vector& x, Vector& p, double eta, std::int64_t S,
              std::int64_t k0, QueryLedger& ledger, Rng& rng, double divergence_radius = 1e6);

Trajectory hmc_run(const PotentialModel& model, GradientProvider& provider, const HyperParams& hp,
                   const Vector& x0, QueryLedger& ledger, Rng& rng, const RunOptions& opts = {});

Trajectory lmc_run(const PotentialModel& model, GradientProvider& provider, const HyperParams& hp,
                   const Vector& x0, QueryLedger& ledger, Rng& rng, const RunOptions& opts = {});

enum class ZerothVariant { QzHmc, QzLmc };

Trajectory zeroth_order_run(ModelPtr model, const HyperParams& hp, const Vector& x0,
                            ZerothVariant variant, QueryLedger& ledger, Rng& rng,
                            const ProviderOptions& opts = {}, const RunOptions& run = {});

// Plans nothing: runs whichever sampler the schedule names with its provider.
Trajectory run_schedule(ModelPtr model, const HyperParams& hp, const Vector& x0,
                        QueryLedger& ledger, Rng& rng, const ProviderOptions& opts = {},
                        const RunOptions& run = {});

Vector default_initial_point(const PotentialModel& model);

struct ChainBatch {
  std::vector<Trajectory> chains;
  std::vector<QueryLedger> ledgers;
  QueryLedger total;
};

using ChainBody = std::function<Trajectory(int chain, QueryLedger& ledger, Rng& rng)>;

// Independent chains on a worker pool. Chain c uses Rng(seed).split(Chain, c), so results
// do not depend on the worker count.
ChainBatch run_chains(int n_chains, std::uint64_t seed, int workers, const ChainBody& body);

}  // namespace qmcmc
