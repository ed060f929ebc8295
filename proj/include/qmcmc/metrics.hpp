#pragma once

#include "qmcmc/ledger.hpp"
#include "qmcmc/rng.hpp"
#include "qmcmc/types.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qmcmc {

enum class MetricKind { W2, KL, TV, SlopeFit };

std::string metric_name(MetricKind k);

struct MetricReport {
  MetricKind kind = MetricKind::W2;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::int64_t sample_count = 0;
  std::string method;            // "sorted", "assignment", "sinkhorn", ...
  double bias_bound = 0.0;       // upper bound on the regularization bias (sinkhorn only)
  std::optional<QueryLedger> ledger;

  nlohmann::json to_json() const;
};

// Bures-Wasserstein distance between two Gaussians.
double w2_gaussian_exact(const Vector& mean1, const Matrix& cov1, const Vector& mean2,
                         const Matrix& cov2);

// KL(N1 || N2).
double kl_gaussian(const Vector& mean1, const Matrix& cov1, const Vector& mean2,
                   const Matrix& cov2);

// Total variation between two 1-D Gaussians by quadrature.
double tv_gaussian_1d(double m1, double s1, double m2, double s2);

struct SampleMoments {
  Vector mean;
  Matrix cov;
};

SampleMoments sample_moments(const std::vector<Vector>& samples);

// W2 between the moment-matched Gaussian of the samples and N(mean, cov).
double w2_gaussian_fit(const std::vector<Vector>& samples, const Vector& mean, const Matrix& cov);

// KL proxy: KL(N(sample moments) || N(mean, cov)).
double gaussian_fit_kl(const std::vector<Vector>& samples, const Vector& mean, const Matrix& cov);

struct EmpiricalW2Options {
  bool exact = true;              // d >= 2: assignment up to max_exact points, else sinkhorn
  std::int64_t max_exact = 2000;
  double reg_scale = 0.01;        // regularization = reg_scale * median pairwise sq. distance
  int sinkhorn_iters = 2000;
  double sinkhorn_tol = 1e-9;
  int bootstrap = 200;            // 0 disables the interval
  std::uint64_t seed = 0;
};

// Exact linear assignment on a square cost matrix; returns the column of each row.
std::vector<int> solve_assignment(const Matrix& cost);

// 1-D: sorted matching. d >= 2: exact assignment (equal sizes, <= max_exact points) or
// log-domain Sinkhorn, whose transport cost exceeds W2^2 by at most reg * 2 ln n.
MetricReport empirical_w2(const std::vector<Vector>& a, const std::vector<Vector>& b,
                          const EmpiricalW2Options& opts = {});

// TV between a 1-D sample histogram and a reference CDF on [lo, hi]; mass outside the range
// counts fully.
MetricReport histogram_tv(const std::vector<double>& samples, const std::function<double(double)>& cdf,
                          double lo, double hi, int bins);

struct SlopeFitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least squares of log y on log x.
SlopeFitResult slope_fit(const std::vector<std::pair<double, double>>& points);

}  // namespace qmcmc
