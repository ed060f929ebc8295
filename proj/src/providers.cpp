#include "qmcmc/samplers.hpp"

#include "qmcmc/qme.hpp"

#include <cmath>
#include <stdexcept>

namespace qmcmc {

Vector full_gradient(const PotentialModel& model, const Vector& x, QueryLedger& ledger) {
  ledger.charge_grad_classical(static_cast<std::uint64_t>(model.components()));
  return model.gradient(x);
}

void reset_anchor(ChainState& state, const PotentialModel& model, QueryLedger& ledger) {
  PhaseScope scope(ledger, kPhaseAnchor);
  state.anchor = state.x;
  state.anchor_full_grad = full_gradient(model, state.x, ledger);
  state.anchor_set = true;
  state.epoch_pos = 0;
}

namespace {

Vector correction_sample(const PotentialModel& model, const ChainState& st, Rng& r) {
  const int i = static_cast<int>(r.uniform_int(0, model.components() - 1));
  return model.component_gradient(i, st.x) - model.component_gradient(i, st.anchor) +
         st.anchor_full_grad;
}

Vector quantum_correction(ChainState& st, const PotentialModel& model, std::int64_t b,
                          QueryLedger& ledger, Rng& rng, const QmeCost& cost) {
  PhaseScope scope(ledger, kPhaseEstimate);
  const double L = model.constants().L;
  QmeRequest req;
  req.d = model.dim();
  req.var_bound = L * L * (st.x - st.anchor).squaredNorm();
  req.sigma_hat_sq = req.var_bound > 0.0 ? req.var_bound / static_cast<double>(b * b) : 1.0;
  req.c_q = cost.c_q;
  req.log_factor = cost.log_factor > 0.0 ? cost.log_factor : default_log_factor(req.d);
  req.kind = OracleKind::Gradient;
  req.queries_per_sample = 2;
  req.max_draws = cost.max_draws;
  req.sample_source = [&](Rng& r) { return correction_sample(model, st, r); };
  return quantum_mean_estimate(req, ledger, rng);
}

Vector classical_correction(const ChainState& st, const PotentialModel& model, std::int64_t B,
                            QueryLedger& ledger, Rng& rng) {
  PhaseScope scope(ledger, kPhaseEstimate);
  Vector acc = Vector::Zero(model.dim());
  for (std::int64_t i = 0; i < B; ++i) acc += correction_sample(model, st, rng);
  ledger.charge_grad_classical(2 * static_cast<std::uint64_t>(B));
  return acc / static_cast<double>(B);
}

}  // namespace

Vector qsvrg_gradient(ChainState& state, const PotentialModel& model, std::int64_t b,
                      std::int64_t m, QueryLedger& ledger, Rng& rng, const QmeCost& cost,
                      bool allow_refresh) {
  require(b >= 1 && m >= 1, "b and m must be positive");
  if (allow_refresh && state.k % m == 0) {
    reset_anchor(state, model, ledger);
    return state.anchor_full_grad;
  }
  if (!state.anchor_set) throw std::logic_error("SVRG anchor unset outside an epoch start");
  state.epoch_pos = state.k % m;
  return quantum_correction(state, model, b, ledger, rng, cost);
}

Vector qcv_gradient(ChainState& state, const PotentialModel& model, std::int64_t b,
                    QueryLedger& ledger, Rng& rng, const QmeCost& cost) {
  require(b >= 1, "b must be positive");
  if (!state.anchor_set) throw std::logic_error("control-variate anchor is not initialized");
  return quantum_correction(state, model, b, ledger, rng, cost);
}

Vector svrg_minibatch_gradient(ChainState& state, const PotentialModel& model, std::int64_t B,
                               std::int64_t m, QueryLedger& ledger, Rng& rng,
                               bool allow_refresh) {
  require(B >= 1 && m >= 1, "B and m must be positive");
  if (allow_refresh && state.k % m == 0) {
    reset_anchor(state, model, ledger);
    return state.anchor_full_grad;
  }
  if (!state.anchor_set) throw std::logic_error("SVRG anchor unset outside an epoch start");
  state.epoch_pos = state.k % m;
  return classical_correction(state, model, B, ledger, rng);
}

Vector cv_minibatch_gradient(ChainState& state, const PotentialModel& model, std::int64_t B,
                             QueryLedger& ledger, Rng& rng) {
  require(B >= 1, "B must be positive");
  if (!state.anchor_set) throw std::logic_error("control-variate anchor is not initialized");
  return classical_correction(state, model, B, ledger, rng);
}

Vector minibatch_gradient(const PotentialModel& model, const Vector& x, std::int64_t B,
                          QueryLedger& ledger, Rng& rng) {
  require(B >= 1, "B must be positive");
  PhaseScope scope(ledger, kPhaseEstimate);
  Vector acc = Vector::Zero(model.dim());
  for (std::int64_t i = 0; i < B; ++i) {
    const int c = static_cast<int>(rng.uniform_int(0, model.components() - 1));
    acc += model.component_gradient(c, x);
  }
  ledger.charge_grad_classical(static_cast<std::uint64_t>(B));
  return acc / static_cast<double>(B);
}

void GradientProvider::initialize(const Vector&, QueryLedger&, Rng&) {}

namespace {

class ExactProvider : public GradientProvider {
 public:
  explicit ExactProvider(ModelPtr m) : model_(std::move(m)) {}
  Vector gradient(const Vector& x, const StepContext&, QueryLedger& ledger, Rng&) override {
    PhaseScope scope(ledger, kPhaseEstimate);
    return full_gradient(*model_, x, ledger);
  }
  std::string name() const override { return "exact"; }

 private:
  ModelPtr model_;
};

class SvrgProvider : public GradientProvider {
 public:
  SvrgProvider(ModelPtr m, std::int64_t b, std::int64_t epoch, bool quantum, QmeCost cost)
      : model_(std::move(m)), b_(b), m_(epoch), quantum_(quantum), cost_(cost) {}
  Vector gradient(const Vector& x, const StepContext& ctx, QueryLedger& ledger,
                  Rng& rng) override {
    st_.x = x;
    st_.k = ctx.k;
    if (quantum_) return qsvrg_gradient(st_, *model_, b_, m_, ledger, rng, cost_, !ctx.half_step);
    return svrg_minibatch_gradient(st_, *model_, b_, m_, ledger, rng, !ctx.half_step);
  }
  std::string name() const override { return quantum_ ? "qsvrg" : "svrg"; }

 private:
  ModelPtr model_;
  std::int64_t b_, m_;
  bool quantum_;
  QmeCost cost_;
  ChainState st_;
};

class CvProvider : public GradientProvider {
 public:
  CvProvider(ModelPtr m, std::int64_t b, bool quantum, QmeCost cost)
      : model_(std::move(m)), b_(b), quantum_(quantum), cost_(cost) {}
  void initialize(const Vector& x0, QueryLedger& ledger, Rng&) override {
    st_.x = x0;
    reset_anchor(st_, *model_, ledger);
  }
  Vector gradient(const Vector& x, const StepContext& ctx, QueryLedger& ledger,
                  Rng& rng) override {
    st_.x = x;
    st_.k = ctx.k;
    if (quantum_) return qcv_gradient(st_, *model_, b_, ledger, rng, cost_);
    return cv_minibatch_gradient(st_, *model_, b_, ledger, rng);
  }
  std::string name() const override { return quantum_ ? "qcv" : "cv"; }

 private:
  ModelPtr model_;
  std::int64_t b_;
  bool quantum_;
  QmeCost cost_;
  ChainState st_;
};

class MinibatchProvider : public GradientProvider {
 public:
  MinibatchProvider(ModelPtr m, std::int64_t b) : model_(std::move(m)), b_(b) {}
  Vector gradient(const Vector& x, const StepContext&, QueryLedger& ledger, Rng& rng) override {
    return minibatch_gradient(*model_, x, b_, ledger, rng);
  }
  std::string name() const override { return "minibatch"; }

 private:
  ModelPtr model_;
  std::int64_t b_;
};

// Zeroth-order gradients from stochastic evaluations only.
class ZerothOrderProvider : public GradientProvider {
 public:
  ZerothOrderProvider(ModelPtr m, double sigma_hat_sq, const ProviderOptions& opts,
                      std::uint64_t seed)
      : model_(std::move(m)),
        sigma_hat_(std::sqrt(sigma_hat_sq)),
        opts_(opts),
        pipe_(*model_, opts.pipeline, seed) {
    require(sigma_hat_sq > 0.0, "zeroth-order provider needs sigma_hat_sq > 0");
  }
  Vector gradient(const Vector& x, const StepContext&, QueryLedger& ledger, Rng& rng) override {
    PhaseScope scope(ledger, kPhaseEstimate);
    const double sigma = model_->constants().noise_sigma;
    if (sigma_hat_ >= sigma) {
      return single_sample_gradient(*model_, x, ledger, rng, opts_.pipeline.c_q,
                                    opts_.pipeline.log_factor);
    }
    if (opts_.regime == ZerothOrderRegime::Smoothness) {
      return robust_mlmc_gradient(*model_, x, sigma_hat_, ledger, rng, opts_.robust,
                                opts_.pipeline.mlmc);
    }
    return pipe_.unbiased(x, sigma_hat_, ledger, rng);
  }
  std::string name() const override { return "zeroth_order"; }

 private:
  ModelPtr model_;
  double sigma_hat_;
  ProviderOptions opts_;
  PhasePipeline pipe_;
};

}  // namespace

std::unique_ptr<GradientProvider> make_exact_provider(ModelPtr model) {
  return std::make_unique<ExactProvider>(std::move(model));
}

ProviderFactory make_provider_factory(ModelPtr model, const HyperParams& hp,
                                      const ProviderOptions& opts) {
  const std::int64_t b = hp.b, m = hp.m;
  const double s2 = hp.sigma_hat_sq;
  switch (hp.schedule) {
    case Schedule::QsvrgHmc:
    case Schedule::QsvrgLmc:
      return [=](std::uint64_t) {
        return std::make_unique<SvrgProvider>(model, b, m, true, opts.qme);
      };
    case Schedule::SvrgHmc:
    case Schedule::SvrgLmc:
      return [=](std::uint64_t) {
        return std::make_unique<SvrgProvider>(model, b, m, false, opts.qme);
      };
    case Schedule::QcvHmc:
      return [=](std::uint64_t) { return std::make_unique<CvProvider>(model, b, true, opts.qme); };
    case Schedule::CvHmc:
      return [=](std::uint64_t) { return std::make_unique<CvProvider>(model, b, false, opts.qme); };
    case Schedule::SgHmc:
    case Schedule::Sgld:
      return [=](std::uint64_t) { return std::make_unique<MinibatchProvider>(model, b); };
    case Schedule::QzHmc:
    case Schedule::QzLmc:
      return [=](std::uint64_t seed) {
        return std::make_unique<ZerothOrderProvider>(model, s2, opts, seed);
      };
  }
  throw std::invalid_argument("unhandled schedule");
}

}  // namespace qmcmc
