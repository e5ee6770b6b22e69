#pragma once

#include "svmr/kernel.hpp"
#include "svmr/samplers.hpp"
#include "svmr/target.hpp"

#include <cmath>
#include <functional>

namespace svmr {

// Self-check utilities backing the `validate` subcommand and the test
// oracles. Everything here deliberately uses plain scalar loops, independent
// of the batched assembly paths it cross-checks.

// Central finite differences of log_density.
inline Vector fd_score(const TargetModel& target, const Vector& x, double step) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector hi = x, lo = x;
    hi(i) += step;
    lo(i) -= step;
    g(i) = (target.log_density(hi) - target.log_density(lo)) / (2.0 * step);
  }
  return g;
}

// Relative error between the analytic score and finite differences at x.
inline double score_fd_error(const TargetModel& target, const Vector& x, double step) {
  const Vector s = target.score(x);
  const Vector fd = fd_score(target, x, step);
  const double scale = std::max({s.norm(), fd.norm(), 1e-6});
  return (s - fd).norm() / scale;
}

// Independent integer-arithmetic controller: smallest m >= 0 with
// m^2 >= rho/tol, by upward search, then clipped.
inline int controller_oracle(double rho, double tol, int m_min, int m_max) {
  const double ratio = rho / tol;
  long m = 0;
  while (static_cast<double>(m) * static_cast<double>(m) < ratio && m <= m_max) ++m;
  if (m < m_min) m = m_min;
  if (m > m_max) m = m_max;
  return static_cast<int>(m);
}

// Scalar-loop evaluation of the vanilla velocity field: for each particle i,
// (1/N) sum_j [ k(x_j, x_i) s_j + grad_{x_j} k(x_j, x_i) ], with clipped
// scores, drift and repulsion accumulated separately then added.
inline Matrix velocity_oracle(const Matrix& particles, const TargetModel& target,
                              const KernelSpec& kernel, double clip_bound) {
  const Index n = particles.rows();
  const Index d = particles.cols();
  const ResolvedBandwidth bw = resolve_bandwidth(kernel, particles);
  Matrix scores(n, d);
  for (Index i = 0; i < n; ++i)
    scores.row(i) = target.score(particles.row(i).transpose()).transpose();
  scores = clip_scores(scores, clip_bound);

  Matrix phi(n, d);
  for (Index i = 0; i < n; ++i) {
    const Vector xi = particles.row(i).transpose();
    Eigen::RowVectorXd drift = Eigen::RowVectorXd::Zero(d);
    Eigen::RowVectorXd rep = Eigen::RowVectorXd::Zero(d);
    for (Index j = 0; j < n; ++j) {
      const Vector xj = particles.row(j).transpose();
      drift += kernel_eval(xj, xi, bw) * scores.row(j);
      rep += kernel_grad_first(xj, xi, bw).transpose();
    }
    phi.row(i) = drift / static_cast<double>(n) + rep / static_cast<double>(n);
  }
  return phi;
}

// Largest entrywise ulp distance between two matrices.
inline double max_ulp_distance(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) {
      const double x = a(i, j), y = b(i, j);
      if (x == y) continue;
      const double ulp = std::abs(x) > 0.0 ? std::abs(x) * 0x1.0p-52 : 0x1.0p-1074;
      worst = std::max(worst, std::abs(x - y) / ulp);
    }
  return worst;
}

}  // namespace svmr
