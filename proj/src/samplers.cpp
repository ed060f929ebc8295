#include "qmcmc/samplers.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace qmcmc {

namespace {

void check_finite(const Vector& x, double radius, std::int64_t step) {
  if (!x.allFinite()) throw DivergenceError("non-finite iterate", step);
  if (x.norm() > radius) throw DivergenceError("iterate left the divergence radius", step);
}

bool should_record(std::int64_t i, std::int64_t total, std::int64_t every) {
  if (every <= 0) return i + 1 == total;
  return (i + 1) % every == 0 || i + 1 == total;
}

}  // namespace

void leapfrog(GradientProvider& provider, Vector& x, Vector& p, double eta, std::int64_t S,
              std::int64_t k0, QueryLedger& ledger, Rng& rng, double divergence_radius) {
  for (std::int64_t s = 0; s < S; ++s) {
    const std::int64_t k = k0 + s;
    const Vector g = provider.gradient(x, {k, false}, ledger, rng);
    x += eta * p - 0.5 * eta * eta * g;
    check_finite(x, divergence_radius, k);
    const Vector g2 = provider.gradient(x, {k, true}, ledger, rng);
    p -= 0.5 * eta * (g + g2);
    if (!p.allFinite()) throw DivergenceError("non-finite momentum", k);
  }
}

Trajectory hmc_run(const PotentialModel& model, GradientProvider& provider, const HyperParams& hp,
                   const Vector& x0, QueryLedger& ledger, Rng& rng, const RunOptions& opts) {
  require(x0.size() == model.dim(), "x0 has the wrong dimension");
  require(hp.eta > 0.0 && hp.S >= 1 && hp.T >= 1, "HMC needs eta > 0, S >= 1, T >= 1");
  Trajectory tr;
  Vector x = x0;
  Vector p = Vector::Zero(model.dim());
  Rng momentum = rng.split(Stream::Momentum);
  provider.initialize(x, ledger, rng);
  for (std::int64_t t = 0; t < hp.T; ++t) {
    p = momentum.normal_vector(model.dim());
    leapfrog(provider, x, p, hp.eta, hp.S, t * hp.S, ledger, rng, opts.divergence_radius);
    if (should_record(t, hp.T, opts.record_every)) {
      tr.samples.push_back(x);
      tr.steps.push_back(t + 1);
    }
  }
  tr.final_x = x;
  tr.final_p = p;
  tr.total_steps = hp.T * hp.S;
  return tr;
}

Trajectory lmc_run(const PotentialModel& model, GradientProvider& provider, const HyperParams& hp,
                   const Vector& x0, QueryLedger& ledger, Rng& rng, const RunOptions& opts) {
  require(x0.size() == model.dim(), "x0 has the wrong dimension");
  require(hp.eta > 0.0 && hp.K >= 1, "LMC needs eta > 0 and K >= 1");
  Trajectory tr;
  Vector x = x0;
  Rng noise = rng.split(Stream::Noise);
  const double scale = std::sqrt(2.0 * hp.eta);
  provider.initialize(x, ledger, rng);
  for (std::int64_t k = 0; k < hp.K; ++k) {
    const Vector g = provider.gradient(x, {k, false}, ledger, rng);
    x += -hp.eta * g + scale * noise.normal_vector(model.dim());
    check_finite(x, opts.divergence_radius, k);
    if (should_record(k, hp.K, opts.record_every)) {
      tr.samples.push_back(x);
      tr.steps.push_back(k + 1);
    }
  }
  tr.final_x = x;
  tr.final_p = Vector::Zero(model.dim());
  tr.total_steps = hp.K;
  return tr;
}

Trajectory zeroth_order_run(ModelPtr model, const HyperParams& hp, const Vector& x0,
                            ZerothVariant variant, QueryLedger& ledger, Rng& rng,
                            const ProviderOptions& opts, const RunOptions& run) {
  HyperParams h = hp;
  h.schedule = variant == ZerothVariant::QzHmc ? Schedule::QzHmc : Schedule::QzLmc;
  return run_schedule(std::move(model), h, x0, ledger, rng, opts, run);
}

Trajectory run_schedule(ModelPtr model, const HyperParams& hp, const Vector& x0,
                        QueryLedger& ledger, Rng& rng, const ProviderOptions& opts,
                        const RunOptions& run) {
  hp.validate();
  auto factory = make_provider_factory(model, hp, opts);
  auto provider = factory(rng.split(Stream::Provider).seed());
  Rng prov_rng = rng.split(Stream::Provider);
  if (is_hmc(hp.schedule)) return hmc_run(*model, *provider, hp, x0, ledger, prov_rng, run);
  return lmc_run(*model, *provider, hp, x0, ledger, prov_rng, run);
}

Vector default_initial_point(const PotentialModel& model) {
  const auto& c = model.constants();
  if (c.x_star) return *c.x_star;
  return Vector::Zero(model.dim());
}

ChainBatch run_chains(int n_chains, std::uint64_t seed, int workers, const ChainBody& body) {
  require(n_chains >= 0, "n_chains must be non-negative");
  ChainBatch out;
  out.chains.resize(n_chains);
  out.ledgers.resize(n_chains);
  const Rng root(seed);
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (int c = next++; c < n_chains; c = next++) {
      try {
        Rng rng = root.split(Stream::Chain, static_cast<std::uint64_t>(c));
        out.chains[c] = body(c, out.ledgers[c], rng);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next = n_chains;
      }
    }
  };
  const int w = std::max(1, std::min(workers, n_chains));
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < w; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  for (const auto& l : out.ledgers) out.total.merge(l);
  return out;
}

}  // namespace qmcmc
