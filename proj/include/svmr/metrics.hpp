#pragma once

#include "svmr/kernel.hpp"
#include "svmr/target.hpp"
#include "svmr/targets/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace svmr {

using ScoreFn = std::function<Vector(const Vector&)>;

inline double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

// Kernel Stein discrepancy, V-statistic form (diagonal included):
// sqrt( (1/N^2) sum_ij kappa_p(x_i, x_j) ) with the RBF Stein kernel
//   kappa = k [ s_i's_j + (s_i - s_j)'(x_i - x_j)/ell^2 + d/ell^2 - r^2/ell^4 ],
// averaged over scales for a multiscale base kernel.
inline double ksd(const Matrix& particles, const ScoreFn& score_fn,
                  const KernelSpec& metric_kernel) {
  const Index n = particles.rows();
  const Index d = particles.cols();
  if (n < 1) throw ConfigError("ksd: needs at least one particle");
  if (!particles.allFinite()) return quiet_nan();

  Matrix scores(n, d);
  for (Index i = 0; i < n; ++i)
    scores.row(i) = score_fn(particles.row(i).transpose()).transpose();
  if (!scores.allFinite()) return quiet_nan();

  const ResolvedBandwidth bw = resolve_bandwidth(metric_kernel, particles);
  const double dd = static_cast<double>(d);
  const double num_scales = static_cast<double>(bw.ell2.size());

  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double r2 = (particles.row(i) - particles.row(j)).squaredNorm();
      const double ss = scores.row(i).dot(scores.row(j));
      const double cross = (scores.row(i) - scores.row(j)).dot(particles.row(i) - particles.row(j));
      double kappa = 0.0;
      for (double ell2 : bw.ell2) {
        const double k = std::exp(-r2 / (2.0 * ell2));
        kappa += k * (ss + cross / ell2 + dd / ell2 - r2 / (ell2 * ell2));
      }
      acc += kappa / num_scales;
    }
  }
  const double v = acc / (static_cast<double>(n) * static_cast<double>(n));
  if (std::isnan(v)) return quiet_nan();
  return std::sqrt(std::max(v, 0.0));
}

inline double ksd(const Matrix& particles, const TargetModel& target,
                  const KernelSpec& metric_kernel) {
  return ksd(particles, [&target](const Vector& x) { return target.score(x); }, metric_kernel);
}

// Empirical mean log-density; -inf entries propagate.
inline double mean_logp(const Matrix& particles, const TargetModel& target) {
  const Index n = particles.rows();
  if (n < 1) throw ConfigError("mean_logp: needs at least one particle");
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) acc += target.log_density(particles.row(i).transpose());
  return acc / static_cast<double>(n);
}

// e_mu = |mu_hat - mu_ref|_2 and e_sigma = |Sigma_hat - Sigma_ref|_F with the
// biased 1/N covariance.
inline std::pair<double, double> moment_errors(const Matrix& particles, const Vector& ref_mean,
                                               const Matrix& ref_cov) {
  const Index n = particles.rows();
  const Index d = particles.cols();
  if (ref_mean.size() != d || ref_cov.rows() != d || ref_cov.cols() != d)
    throw ConfigError("moment_errors: reference moment dimension mismatch");
  if (!particles.allFinite()) return {quiet_nan(), quiet_nan()};
  const Vector mean = particles.colwise().mean().transpose();
  Matrix cov = Matrix::Zero(d, d);
  for (Index i = 0; i < n; ++i) {
    const Vector c = particles.row(i).transpose() - mean;
    cov += c * c.transpose();
  }
  cov /= static_cast<double>(n);
  return {(mean - ref_mean).norm(), (cov - ref_cov).norm()};
}

// Autocorrelation ESS with initial-positive truncation: sum lag
// autocorrelations while they stay positive, ESS = L / (1 + 2 sum), clamped
// to [1, L]. An exactly constant series carries no autocorrelation evidence
// and returns L.
inline double ess_1d(const std::vector<double>& series) {
  const std::size_t L = series.size();
  if (L < 4) throw ConfigError("ess_1d: needs at least 4 points");
  for (double v : series)
    if (!std::isfinite(v)) return quiet_nan();
  const double first = series[0];
  bool constant = true;
  for (double v : series)
    if (v != first) {
      constant = false;
      break;
    }
  if (constant) return static_cast<double>(L);

  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(L);
  double c0 = 0.0;
  for (double v : series) c0 += (v - mean) * (v - mean);
  c0 /= static_cast<double>(L);
  if (!(c0 > 0.0)) return static_cast<double>(L);

  double rho_sum = 0.0;
  for (std::size_t t = 1; t < L; ++t) {
    double ct = 0.0;
    for (std::size_t i = 0; i + t < L; ++i) ct += (series[i] - mean) * (series[i + t] - mean);
    ct /= static_cast<double>(L);
    const double rho = ct / c0;
    if (rho <= 0.0) break;
    rho_sum += rho;
  }
  const double ess = static_cast<double>(L) / (1.0 + 2.0 * rho_sum);
  return std::clamp(ess, 1.0, static_cast<double>(L));
}

struct PredictiveMetrics {
  double nll = 0.0;
  double acc = 0.0;
  double ece = 0.0;
};

namespace detail {

// Equal-width bins on [0,1]; left-closed edges, last bin closed on the right.
inline int ece_bin(double p, int bins) {
  int b = std::clamp(static_cast<int>(std::floor(p * bins)), 0, bins - 1);
  while (b > 0 && p < static_cast<double>(b) / bins) --b;
  while (b < bins - 1 && p >= static_cast<double>(b + 1) / bins) ++b;
  return b;
}

}  // namespace detail

inline PredictiveMetrics predictive_metrics(const std::vector<double>& probs,
                                            const std::vector<int>& labels, int bins = 10) {
  const std::size_t m = probs.size();
  if (m < 1) throw ConfigError("predictive_metrics: needs at least one example");
  if (labels.size() != m) throw ConfigError("predictive_metrics: probs/labels size mismatch");
  if (bins < 1) throw ConfigError("predictive_metrics: bins must be >= 1");
  for (int y : labels)
    if (y != 0 && y != 1) throw DataError("predictive_metrics: labels must be 0/1");
  for (double p : probs)
    if (!std::isfinite(p)) return {quiet_nan(), quiet_nan(), quiet_nan()};

  PredictiveMetrics out;
  std::vector<double> bin_conf(bins, 0.0), bin_acc(bins, 0.0);
  std::vector<std::size_t> bin_count(bins, 0);
  double nll = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double p = probs[i];
    const double pc = std::min(std::max(p, 1e-12), 1.0 - 1e-12);  // log terms only
    nll -= labels[i] == 1 ? std::log(pc) : std::log(1.0 - pc);
    const int predicted = p >= 0.5 ? 1 : 0;
    const bool hit = predicted == labels[i];
    if (hit) ++correct;
    const int b = detail::ece_bin(p, bins);
    bin_conf[b] += p;
    bin_acc[b] += hit ? 1.0 : 0.0;
    bin_count[b] += 1;
  }
  out.nll = nll / static_cast<double>(m);
  out.acc = static_cast<double>(correct) / static_cast<double>(m);
  double ece = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (bin_count[b] == 0) continue;
    const double cnt = static_cast<double>(bin_count[b]);
    ece += (cnt / static_cast<double>(m)) * std::abs(bin_acc[b] / cnt - bin_conf[b] / cnt);
  }
  out.ece = ece;
  return out;
}

// Ensemble-averaged posterior predictive probabilities for one split.
inline std::vector<double> posterior_predictive(const Matrix& particles,
                                                const PredictiveTarget& target, Split split) {
  const Index m = target.num_examples(split);
  const Index n = particles.rows();
  std::vector<double> probs(static_cast<std::size_t>(m), 0.0);
  for (Index e = 0; e < m; ++e) {
    double acc = 0.0;
    for (Index i = 0; i < n; ++i)
      acc += target.predict_proba(particles.row(i).transpose(), split, e);
    probs[static_cast<std::size_t>(e)] = acc / static_cast<double>(n);
  }
  return probs;
}

struct ModeMetrics {
  double coverage = 0.0;
  double entropy = 0.0;
  double imbalance = 0.0;
};

// Nearest-center assignment (ties to the lowest index), empirical mode
// masses, and the coverage / normalized entropy / imbalance summaries.
inline ModeMetrics mode_metrics(const Matrix& particles, const MixtureSpec& spec,
                                double threshold = 0.05) {
  const Index k = spec.num_modes();
  if (k < 2) throw ConfigError("mode_metrics: needs at least two modes");
  if (!particles.allFinite()) return {quiet_nan(), quiet_nan(), quiet_nan()};
  const Index n = particles.rows();
  std::vector<double> mass(static_cast<std::size_t>(k), 0.0);
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    double best_d = (particles.row(i) - spec.centers.row(0)).squaredNorm();
    for (Index c = 1; c < k; ++c) {
      const double dd = (particles.row(i) - spec.centers.row(c)).squaredNorm();
      if (dd < best_d) {
        best_d = dd;
        best = c;
      }
    }
    mass[static_cast<std::size_t>(best)] += 1.0;
  }
  for (double& p : mass) p /= static_cast<double>(n);

  ModeMetrics out;
  double covered = 0.0, entropy = 0.0, mean = 1.0 / static_cast<double>(k), var = 0.0;
  for (double p : mass) {
    if (p >= threshold) covered += 1.0;
    if (p > 0.0) entropy -= p * std::log(p);
    var += (p - mean) * (p - mean);
  }
  out.coverage = covered / static_cast<double>(k);
  out.entropy = entropy / std::log(static_cast<double>(k));
  out.imbalance = std::sqrt(var / static_cast<double>(k));
  return out;
}

}  // namespace svmr
