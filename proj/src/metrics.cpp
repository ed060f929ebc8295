#include "qmcmc/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace qmcmc {

std::string metric_name(MetricKind k) {
  switch (k) {
    case MetricKind::W2: return "W2";
    case MetricKind::KL: return "KL";
    case MetricKind::TV: return "TV";
    case MetricKind::SlopeFit: return "SlopeFit";
  }
  return "unknown";
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j = {{"metric", metric_name(kind)}, {"value", value},       {"ci_low", ci_low},
                      {"ci_high", ci_high},          {"sample_count", sample_count},
                      {"method", method},            {"bias_bound", bias_bound}};
  if (ledger) j["ledger"] = ledger->to_json();
  return j;
}

namespace {

void check_psd(const Matrix& c, const char* what) {
  require(c.rows() == c.cols(), std::string(what) + " is not square");
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  require((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale,
          std::string(what) + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-10 * scale,
          std::string(what) + " is not positive semidefinite");
}

Matrix psd_sqrt(const Matrix& c) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c + c.transpose()));
  const Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double normal_pdf(double x, double m, double s) {
  const double z = (x - m) / s;
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * M_PI));
}

double squared_distance(const Vector& a, const Vector& b) { return (a - b).squaredNorm(); }

double sorted_w2(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Quantile coupling; handles unequal sizes by integrating over the merged breakpoints.
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double pos = 0.0, acc = 0.0;
  while (i < a.size() && j < b.size()) {
    const double next = std::min((i + 1) / na, (j + 1) / nb);
    const double diff = a[i] - b[j];
    acc += (next - pos) * diff * diff;
    pos = next;
    if ((i + 1) / na <= next + 1e-15) ++i;
    if ((j + 1) / nb <= next + 1e-15) ++j;
  }
  return std::sqrt(std::max(0.0, acc));
}

Matrix cost_matrix(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  Matrix c(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c(i, j) = squared_distance(a[i], b[j]);
  return c;
}

double median_sq_distance(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  const std::size_t na = std::min<std::size_t>(a.size(), 500), nb = std::min<std::size_t>(b.size(), 500);
  std::vector<double> d;
  d.reserve(na * nb);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) d.push_back(squared_distance(a[i], b[j]));
  auto mid = d.begin() + d.size() / 2;
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

double log_sum_exp(const double* v, std::size_t n, std::size_t stride) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, v[k * stride]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(v[k * stride] - mx);
  return mx + std::log(s);
}

// Transport cost of the entropic plan with uniform marginals.
double sinkhorn_cost(const Matrix& C, double reg, int iters, double tol) {
  const Eigen::Index n = C.rows(), m = C.cols();
  const double la = -std::log(static_cast<double>(n)), lb = -std::log(static_cast<double>(m));
  Vector f = Vector::Zero(n), g = Vector::Zero(m);
  Matrix work(n, m);
  for (int it = 0; it < iters; ++it) {
    // Row update.
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) work(i, j) = (g(j) - C(i, j)) / reg;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::RowVectorXd row = work.row(i);
      f(i) = reg * (la - log_sum_exp(row.data(), m, 1));
    }
    // Column update, tracking the column-marginal error before the fix.
    double err = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      Vector col(n);
      for (Eigen::Index i = 0; i < n; ++i) col(i) = (f(i) - C(i, j)) / reg;
      const double lse = log_sum_exp(col.data(), n, 1);
      const double marginal = std::exp(lse + g(j) / reg);
      err += std::abs(marginal - std::exp(lb));
      g(j) = reg * (lb - lse);
    }
    if (err < tol) break;
  }
  double cost = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) cost += std::exp((f(i) + g(j) - C(i, j)) / reg) * C(i, j);
  return cost;
}

struct W2Eval {
  double value = 0.0;
  std::string method;
  double bias_bound = 0.0;
};

W2Eval w2_once(const std::vector<Vector>& a, const std::vector<Vector>& b,
               const EmpiricalW2Options& opts) {
  const int d = static_cast<int>(a.front().size());
  if (d == 1) {
    std::vector<double> xa(a.size()), xb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) xa[i] = a[i](0);
    for (std::size_t i = 0; i < b.size(); ++i) xb[i] = b[i](0);
    return {sorted_w2(std::move(xa), std::move(xb)), "sorted", 0.0};
  }
  const Matrix C = cost_matrix(a, b);
  if (opts.exact && a.size() == b.size() &&
      static_cast<std::int64_t>(a.size()) <= opts.max_exact) {
    const auto assign = solve_assignment(C);
    double acc = 0.0;
    for (std::size_t i = 0; i < assign.size(); ++i) acc += C(i, assign[i]);
    return {std::sqrt(acc / static_cast<double>(a.size())), "assignment", 0.0};
  }
  const double reg = std::max(1e-12, opts.reg_scale * median_sq_distance(a, b));
  const double cost = sinkhorn_cost(C, reg, opts.sinkhorn_iters, opts.sinkhorn_tol);
  const double n = static_cast<double>(std::max(a.size(), b.size()));
  return {std::sqrt(std::max(0.0, cost)), "sinkhorn", reg * 2.0 * std::log(n)};
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

double w2_gaussian_exact(const Vector& mean1, const Matrix& cov1, const Vector& mean2,
                         const Matrix& cov2) {
  require(mean1.size() == mean2.size() && cov1.rows() == mean1.size() &&
              cov2.rows() == mean2.size(),
          "dimension mismatch");
  check_psd(cov1, "cov1");
  check_psd(cov2, "cov2");
  const Matrix r2 = psd_sqrt(cov2);
  const Matrix cross = psd_sqrt(r2 * cov1 * r2);
  const double tr = (cov1 + cov2 - 2.0 * cross).trace();
  return std::sqrt(std::max(0.0, (mean1 - mean2).squaredNorm() + std::max(0.0, tr)));
}

double kl_gaussian(const Vector& mean1, const Matrix& cov1, const Vector& mean2,
                   const Matrix& cov2) {
  require(mean1.size() == mean2.size(), "dimension mismatch");
  check_psd(cov1, "cov1");
  check_psd(cov2, "cov2");
  const Eigen::LLT<Matrix> l2(cov2), l1(cov1);
  require(l2.info() == Eigen::Success && l1.info() == Eigen::Success,
          "KL needs positive definite covariances");
  const Vector dm = mean2 - mean1;
  const double d = static_cast<double>(mean1.size());
  const double logdet2 = 2.0 * l2.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet1 = 2.0 * l1.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double tr = l2.solve(cov1).trace();
  const double quad = dm.dot(l2.solve(dm));
  return std::max(0.0, 0.5 * (tr + quad - d + logdet2 - logdet1));
}

double tv_gaussian_1d(double m1, double s1, double m2, double s2) {
  require(s1 > 0.0 && s2 > 0.0, "standard deviations must be positive");
  const double lo = std::min(m1 - 12.0 * s1, m2 - 12.0 * s2);
  const double hi = std::max(m1 + 12.0 * s1, m2 + 12.0 * s2);
  const int n = 200000;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double x = lo + k * h;
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += w * std::abs(normal_pdf(x, m1, s1) - normal_pdf(x, m2, s2));
  }
  return 0.5 * acc * h / 3.0;
}

SampleMoments sample_moments(const std::vector<Vector>& samples) {
  require(samples.size() >= 2, "need at least two samples");
  const int d = static_cast<int>(samples.front().size());
  SampleMoments m{Vector::Zero(d), Matrix::Zero(d, d)};
  for (const auto& s : samples) m.mean += s;
  m.mean /= static_cast<double>(samples.size());
  for (const auto& s : samples) {
    const Vector c = s - m.mean;
    m.cov += c * c.transpose();
  }
  m.cov /= static_cast<double>(samples.size() - 1);
  return m;
}

double w2_gaussian_fit(const std::vector<Vector>& samples, const Vector& mean, const Matrix& cov) {
  const auto m = sample_moments(samples);
  return w2_gaussian_exact(m.mean, m.cov, mean, cov);
}

double gaussian_fit_kl(const std::vector<Vector>& samples, const Vector& mean, const Matrix& cov) {
  const auto m = sample_moments(samples);
  return kl_gaussian(m.mean, m.cov, mean, cov);
}

std::vector<int> solve_assignment(const Matrix& cost) {
  require(cost.rows() == cost.cols(), "assignment needs a square cost matrix");
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // Hungarian algorithm with potentials, 1-based helper arrays.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

MetricReport empirical_w2(const std::vector<Vector>& a, const std::vector<Vector>& b,
                          const EmpiricalW2Options& opts) {
  require(a.size() >= 100 && b.size() >= 100, "empirical_w2 needs at least 100 samples each");
  const auto d = a.front().size();
  for (const auto& x : a) require(x.size() == d, "inconsistent dimension in samples_a");
  for (const auto& x : b) require(x.size() == d, "samples_b dimension differs from samples_a");

  const W2Eval base = w2_once(a, b, opts);
  MetricReport r;
  r.kind = MetricKind::W2;
  r.value = base.value;
  r.method = base.method;
  r.bias_bound = base.bias_bound;
  r.sample_count = static_cast<std::int64_t>(std::min(a.size(), b.size()));
  r.ci_low = r.ci_high = r.value;
  if (opts.bootstrap > 0) {
    const Rng root(opts.seed);
    std::vector<double> vals;
    vals.reserve(opts.bootstrap);
    std::vector<Vector> ra(a.size()), rb(b.size());
    for (int k = 0; k < opts.bootstrap; ++k) {
      Rng rng = root.split(Stream::Bootstrap, static_cast<std::uint64_t>(k));
      for (auto& x : ra) x = a[rng.uniform_int(0, a.size() - 1)];
      for (auto& x : rb) x = b[rng.uniform_int(0, b.size() - 1)];
      vals.push_back(w2_once(ra, rb, opts).value);
    }
    r.ci_low = std::min(r.value, percentile(vals, 0.025));
    r.ci_high = std::max(r.value, percentile(vals, 0.975));
  }
  return r;
}

MetricReport histogram_tv(const std::vector<double>& samples,
                          const std::function<double(double)>& cdf, double lo, double hi,
                          int bins) {
  require(!samples.empty(), "histogram_tv needs samples");
  require(hi > lo && bins >= 1, "histogram_tv needs hi > lo and bins >= 1");
  std::vector<double> counts(bins, 0.0);
  double below = 0.0, above = 0.0;
  const double width = (hi - lo) / bins;
  for (double s : samples) {
    if (s < lo) {
      below += 1.0;
    } else if (s >= hi) {
      above += 1.0;
    } else {
      counts[std::min(bins - 1, static_cast<int>((s - lo) / width))] += 1.0;
    }
  }
  const double n = static_cast<double>(samples.size());
  double acc = std::abs(below / n - cdf(lo)) + std::abs(above / n - (1.0 - cdf(hi)));
  for (int k = 0; k < bins; ++k) {
    const double p = cdf(lo + (k + 1) * width) - cdf(lo + k * width);
    acc += std::abs(counts[k] / n - p);
  }
  MetricReport r;
  r.kind = MetricKind::TV;
  r.value = 0.5 * acc;
  r.ci_low = r.ci_high = r.value;
  r.sample_count = static_cast<std::int64_t>(samples.size());
  r.method = "histogram";
  return r;
}

SlopeFitResult slope_fit(const std::vector<std::pair<double, double>>& points) {
  require(points.size() >= 3, "slope_fit needs at least 3 points");
  std::vector<double> lx, ly;
  for (const auto& [x, y] : points) {
    require(x > 0.0 && y > 0.0 && std::isfinite(x) && std::isfinite(y),
            "slope_fit needs positive finite points");
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  require(sxx > 0.0, "slope_fit needs at least two distinct x values");
  SlopeFitResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  const double ss_res = syy - r.slope * sxy;
  r.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return r;
}

}  // namespace qmcmc
