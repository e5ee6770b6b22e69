#pragma once

#include "svmr/common.hpp"
#include "svmr/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace svmr {

enum class KernelKind { rbf, multiscale_rbf };
enum class BandwidthPolicy { median_heuristic, fixed };

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  BandwidthPolicy policy = BandwidthPolicy::median_heuristic;
  double scale_factor = 1.0;                          // multiplier on the heuristic bandwidth
  std::vector<double> multiscale_factors = {0.5, 1.0, 2.0};
  double fixed_ell2 = 1.0;                            // used when policy == fixed
  double ell2_floor = 1e-6;                           // degenerate-ensemble fallback

  void validate() const {
    if (scale_factor <= 0.0) throw ConfigError("KernelSpec: scale_factor must be positive");
    if (fixed_ell2 <= 0.0) throw ConfigError("KernelSpec: fixed_ell2 must be positive");
    if (ell2_floor <= 0.0) throw ConfigError("KernelSpec: ell2_floor must be positive");
    if (kind == KernelKind::multiscale_rbf) {
      if (multiscale_factors.empty())
        throw ConfigError("KernelSpec: multiscale kernel needs at least one factor");
      for (double c : multiscale_factors)
        if (c <= 0.0) throw ConfigError("KernelSpec: bandwidth factors must be positive");
    }
  }
};

// Squared bandwidths, one per scale (a single entry for the plain RBF).
struct ResolvedBandwidth {
  std::vector<double> ell2;
};

// Median heuristic: ell^2 = med^2 / log(N+1) where med is the median of the
// N(N-1)/2 pairwise Euclidean distances. An exactly collapsed ensemble falls
// back to the floor instead of dividing by zero downstream.
inline double median_bandwidth(const Matrix& particles, double ell2_floor = 1e-6) {
  const Index n = particles.rows();
  if (n < 2) throw ConfigError("median_bandwidth: needs at least two particles");
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      dists.push_back((particles.row(i) - particles.row(j)).norm());
  const std::size_t m = dists.size();
  double med;
  if (m % 2 == 1) {
    std::nth_element(dists.begin(), dists.begin() + m / 2, dists.end());
    med = dists[m / 2];
  } else {
    std::nth_element(dists.begin(), dists.begin() + m / 2, dists.end());
    double hi = dists[m / 2];
    std::nth_element(dists.begin(), dists.begin() + m / 2 - 1, dists.end());
    med = 0.5 * (dists[m / 2 - 1] + hi);
  }
  double ell2 = med * med / std::log(static_cast<double>(n) + 1.0);
  return std::max(ell2, ell2_floor);
}

inline ResolvedBandwidth resolve_bandwidth(const KernelSpec& spec, const Matrix& particles) {
  spec.validate();
  double base;
  if (spec.policy == BandwidthPolicy::fixed) {
    base = spec.fixed_ell2;
  } else if (particles.rows() < 2) {
    base = spec.ell2_floor;  // degenerate fallback; k(x,x) and grad k(x,x) do not depend on it
  } else {
    base = spec.scale_factor * median_bandwidth(particles, spec.ell2_floor);
    base = std::max(base, spec.ell2_floor);
  }
  ResolvedBandwidth bw;
  if (spec.kind == KernelKind::rbf) {
    bw.ell2.push_back(base);
  } else {
    for (double c : spec.multiscale_factors) bw.ell2.push_back(c * c * base);
  }
  return bw;
}

// k(x,y) = exp(-|x-y|^2 / (2 ell^2)), averaged over scales for the
// multiscale kernel so that k(x,x) = 1 in both cases.
inline double kernel_eval(const Vector& x, const Vector& y, const ResolvedBandwidth& bw) {
  const double r2 = (x - y).squaredNorm();
  double acc = 0.0;
  for (double ell2 : bw.ell2) acc += std::exp(-r2 / (2.0 * ell2));
  return acc / static_cast<double>(bw.ell2.size());
}

// Gradient with respect to the first argument; antisymmetric under swapping
// the arguments.
inline Vector kernel_grad_first(const Vector& x, const Vector& y, const ResolvedBandwidth& bw) {
  const Vector diff = x - y;
  const double r2 = diff.squaredNorm();
  Vector grad = Vector::Zero(x.size());
  for (double ell2 : bw.ell2) grad += (-std::exp(-r2 / (2.0 * ell2)) / ell2) * diff;
  return grad / static_cast<double>(bw.ell2.size());
}

// trace of the mixed second derivative d^2 k / dx dx', used by the Stein
// kernel: (d/ell^2 - r^2/ell^4) k per scale.
inline double kernel_stein_trace(const Vector& x, const Vector& y, const ResolvedBandwidth& bw) {
  const double r2 = (x - y).squaredNorm();
  const double d = static_cast<double>(x.size());
  double acc = 0.0;
  for (double ell2 : bw.ell2)
    acc += (d / ell2 - r2 / (ell2 * ell2)) * std::exp(-r2 / (2.0 * ell2));
  return acc / static_cast<double>(bw.ell2.size());
}

// Batched assembly of the interaction tables. K(j,i) = k(x_j, x_i) and
// G.row(j*N + i) = grad_{x_j} k(x_j, x_i). Charges N^2 kernel evaluations.
inline void pairwise_tables(const Matrix& particles, const ResolvedBandwidth& bw,
                            Matrix& K, Matrix& G, CostCounters& ctr) {
  const Index n = particles.rows();
  const Index d = particles.cols();
  K.resize(n, n);
  G.resize(n * n, d);
  for (Index j = 0; j < n; ++j) {
    const Vector xj = particles.row(j).transpose();
    for (Index i = 0; i < n; ++i) {
      const Vector xi = particles.row(i).transpose();
      K(j, i) = kernel_eval(xj, xi, bw);
      G.row(j * n + i) = kernel_grad_first(xj, xi, bw).transpose();
    }
  }
  ctr.kernel_evals += static_cast<std::int64_t>(n) * n;
}

inline KernelKind parse_kernel_kind(const std::string& s) {
  if (s == "rbf") return KernelKind::rbf;
  if (s == "multiscale-rbf") return KernelKind::multiscale_rbf;
  throw ConfigError("unknown kernel kind: " + s);
}

inline BandwidthPolicy parse_bandwidth_policy(const std::string& s) {
  if (s == "median-heuristic" || s == "median") return BandwidthPolicy::median_heuristic;
  if (s == "fixed") return BandwidthPolicy::fixed;
  throw ConfigError("unknown bandwidth policy: " + s);
}

}  // namespace svmr
