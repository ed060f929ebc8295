#pragma once

#include "qmcmc/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qmcmc {

class QueryLedger;

enum class ModelKind { FiniteSumQuadratic, GaussianMixture, PerturbedStronglyConvex, Custom };

enum class SeedPurpose { ComponentIndex, NoiseRealization, SmoothingDirection };

struct StochasticSeed {
  std::uint64_t seed = 0;
  SeedPurpose purpose = SeedPurpose::NoiseRealization;
};

// Declared constants of a potential. M and sigma refer to the experiment ball.
struct ModelConstants {
  int d = 1;
  int n = 1;
  double L = 0.0;
  double mu = 0.0;
  double lsi_alpha = 0.0;
  double M = 1.0;
  double noise_sigma = 0.0;
  double noise_amplitude = 0.0;
  double domain_radius = 0.0;
  std::optional<Vector> x_star;
};

class PotentialModel {
 public:
  PotentialModel(ModelKind kind, ModelConstants c) : kind_(kind), c_(std::move(c)) {}
  virtual ~PotentialModel() = default;

  ModelKind kind() const { return kind_; }
  const ModelConstants& constants() const { return c_; }
  int dim() const { return c_.d; }
  int components() const { return c_.n; }

  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual double component_value(int i, const Vector& x) const;
  virtual Vector component_gradient(int i, const Vector& x) const;

  // Closed-form Gibbs target when it is Gaussian.
  virtual std::optional<std::pair<Vector, Matrix>> gaussian_target() const { return std::nullopt; }

  // Multiplicative noise factor xi(seed), uniform on [1 - a, 1 + a].
  double noise_factor(std::uint64_t seed) const;

  std::string kind_name() const;

 protected:
  void check_dim(const Vector& x) const;
  ModelConstants& mutable_constants() { return c_; }

 private:
  ModelKind kind_;
  ModelConstants c_;
};

using ModelPtr = std::shared_ptr<const PotentialModel>;

// f_i(x) = 0.5 * sum_j a_ij (x_j - c_ij)^2. With a_i = 1 this is ||x - c_i||^2 / 2.
class FiniteSumQuadratic : public PotentialModel {
 public:
  FiniteSumQuadratic(std::vector<Vector> centers, std::vector<Vector> curvatures,
                     double noise_amplitude, double domain_scale);

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  double component_value(int i, const Vector& x) const override;
  Vector component_gradient(int i, const Vector& x) const override;
  std::optional<std::pair<Vector, Matrix>> gaussian_target() const override;

  const std::vector<Vector>& centers() const { return centers_; }
  const std::vector<Vector>& curvatures() const { return curv_; }

 private:
  std::vector<Vector> centers_;
  std::vector<Vector> curv_;
  Vector mean_curv_;
  Vector mean_weighted_center_;
  double offset_ = 0.0;
};

// Equal-weight mixture of N(-m e1, s^2 I) and N(m e1, s^2 I); f = -log density.
class GaussianMixture : public PotentialModel {
 public:
  GaussianMixture(int d, double separation, double scale, double noise_amplitude,
                  double domain_radius);

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;

  double density(const Vector& x) const;
  double first_coordinate_cdf(double t) const;
  double separation() const { return m_; }
  double scale() const { return s_; }

 private:
  int d_;
  double m_;
  double s_;
};

// Lower bound on the 1-D LSI constant of x^2/(2s^2) - log cosh(m x / s^2) through a
// convex comparison potential and bounded perturbation.
double mixture_lsi_lower_bound(double separation, double scale);

// f(x) = (mu/2)||x - c||^2 + A sin(w ||x||_1). Approximately convex within A of F.
class PerturbedStronglyConvex : public PotentialModel {
 public:
  PerturbedStronglyConvex(Vector center, double mu, double amplitude, double frequency,
                          double noise_amplitude, double domain_radius);

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;

  double convex_part(const Vector& x) const;
  double convex_mu() const { return mu_F_; }
  double amplitude() const { return amp_; }
  double frequency() const { return freq_; }
  const Vector& center() const { return center_; }

 private:
  Vector center_;
  double mu_F_;
  double amp_;
  double freq_;
};

class CustomModel : public PotentialModel {
 public:
  CustomModel(ModelConstants c, std::function<double(const Vector&)> f,
              std::function<Vector(const Vector&)> grad);

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;

 private:
  std::function<double(const Vector&)> f_;
  std::function<Vector(const Vector&)> grad_;
};

struct QuadraticSpec {
  int d = 2;
  int n = 64;
  double center_radius = 1.0;
  double curvature_spread = 0.0;  // per-coordinate curvature in [1 - s, 1 + s]
  double noise_amplitude = 0.5;
  double domain_scale = 10.0;
  std::uint64_t seed = 1;
};

ModelPtr make_finite_sum_quadratic(const QuadraticSpec& spec);

ModelPtr make_gaussian_mixture(int d, double separation = 1.5, double scale = 1.0,
                               double noise_amplitude = 0.5, double domain_radius = 10.0);

// domain_radius <= 0 selects 10 * sqrt(d / mu).
ModelPtr make_perturbed_strongly_convex(int d, double mu, double amplitude, double frequency,
                                        double noise_amplitude = 0.5,
                                        double domain_radius = 0.0);

// Ground truth f(x), no noise, no ledger charge.
double eval_exact(const PotentialModel& model, const Vector& x);
Vector grad_exact(const PotentialModel& model, const Vector& x);

// 0-based component index; charges one gradient query when a ledger is given.
Vector grad_component(const PotentialModel& model, int i, const Vector& x,
                      QueryLedger* ledger = nullptr);

// f(x; xi) = xi * f(x). Pure in (x, seed); charges one evaluation query.
double stochastic_eval(const PotentialModel& model, const Vector& x, StochasticSeed xi,
                       QueryLedger* ledger = nullptr);

// Gradient of the realized component f(.; xi). Used by gradient-estimation contracts.
Vector stochastic_gradient(const PotentialModel& model, const Vector& x, StochasticSeed xi);

// Symmetric two-point sphere estimate of grad f_v(x), f_v the ball average of f.
// Direction and noise are both derived from xi; charges two evaluation queries.
Vector smoothed_grad_sample(const PotentialModel& model, const Vector& x, double v,
                            StochasticSeed xi, QueryLedger* ledger = nullptr);

}  // namespace qmcmc
