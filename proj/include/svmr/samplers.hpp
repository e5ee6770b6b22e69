#pragma once

#include "svmr/ensemble.hpp"
#include "svmr/kernel.hpp"
#include "svmr/target.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace svmr {

// Attractive and repulsive parts of the update. Their sum is the vanilla
// velocity field, entrywise.
struct FieldPair {
  Matrix drift;
  Matrix repulsion;
};

// Outcome of one adaptive macro step.
struct AdaptReport {
  double rho = 0.0;
  int m_chosen = 1;
  bool reused_predictor = false;
};

// Single-chain baseline state (SGLD uses position only).
struct ChainState {
  Vector position;
  Vector momentum;
  double eta = 1e-3;
  double alpha = 0.1;
  double beta = 0.9;
  double minibatch_fraction = 1.0;
};

namespace detail {

inline void require_finite(const Matrix& particles, const char* where) {
  if (!particles.allFinite()) throw DivergedError(std::string(where) + ": non-finite particle state");
}

// Batched clipped scores; one batch of N per-particle gradient evaluations.
inline Matrix clipped_scores(const Matrix& particles, const TargetModel& target,
                             const StepConfig& cfg, CostCounters& ctr) {
  const Index n = particles.rows();
  Matrix scores(n, particles.cols());
  for (Index i = 0; i < n; ++i)
    scores.row(i) = target.score(particles.row(i).transpose()).transpose();
  ctr.grad_evals += n;
  ctr.grad_batches += 1;
  return clip_scores(scores, cfg.clip_bound);
}

// Repulsion field (1/N) sum_j grad_{x_j} k(x_j, x_i); one pairwise table,
// charged as N^2 kernel evaluations.
inline Matrix repulsion_field(const Matrix& particles, const KernelSpec& kernel,
                              CostCounters& ctr) {
  const Index n = particles.rows();
  const ResolvedBandwidth bw = resolve_bandwidth(kernel, particles);
  Matrix rep = Matrix::Zero(n, particles.cols());
  for (Index i = 0; i < n; ++i) {
    const Vector xi = particles.row(i).transpose();
    for (Index j = 0; j < n; ++j)
      rep.row(i) += kernel_grad_first(particles.row(j).transpose(), xi, bw).transpose();
  }
  ctr.kernel_evals += static_cast<std::int64_t>(n) * n;
  return rep / static_cast<double>(n);
}

// Drift field (1/N) sum_j k(x_j, x_i) s_j with clipped scores. Charged as N
// gradient evaluations only: kernel_evals counts repulsion and joint table
// assemblies, never drift-only ones.
inline Matrix drift_field(const Matrix& particles, const TargetModel& target,
                          const KernelSpec& kernel, const StepConfig& cfg, CostCounters& ctr) {
  const Index n = particles.rows();
  const ResolvedBandwidth bw = resolve_bandwidth(kernel, particles);
  const Matrix scores = clipped_scores(particles, target, cfg, ctr);
  Matrix drift = Matrix::Zero(n, particles.cols());
  for (Index i = 0; i < n; ++i) {
    const Vector xi = particles.row(i).transpose();
    for (Index j = 0; j < n; ++j)
      drift.row(i) += kernel_eval(particles.row(j).transpose(), xi, bw) * scores.row(j);
  }
  return drift / static_cast<double>(n);
}

}  // namespace detail

// Assembles both fields from one pairwise table: N gradient evaluations and
// N^2 kernel evaluations.
inline FieldPair compute_fields(const Ensemble& ens, const TargetModel& target,
                                const KernelSpec& kernel, const StepConfig& cfg,
                                CostCounters& ctr) {
  detail::require_finite(ens.particles, "compute_fields");
  const Matrix& x = ens.particles;
  const Index n = x.rows();
  const ResolvedBandwidth bw = resolve_bandwidth(kernel, x);
  const Matrix scores = detail::clipped_scores(x, target, cfg, ctr);

  FieldPair f;
  f.drift = Matrix::Zero(n, x.cols());
  f.repulsion = Matrix::Zero(n, x.cols());
  for (Index i = 0; i < n; ++i) {
    const Vector xi = x.row(i).transpose();
    for (Index j = 0; j < n; ++j) {
      const Vector xj = x.row(j).transpose();
      f.drift.row(i) += kernel_eval(xj, xi, bw) * scores.row(j);
      f.repulsion.row(i) += kernel_grad_first(xj, xi, bw).transpose();
    }
  }
  ctr.kernel_evals += static_cast<std::int64_t>(n) * n;
  f.drift /= static_cast<double>(n);
  f.repulsion /= static_cast<double>(n);
  return f;
}

// Vanilla update x <- x + h * (drift + repulsion).
inline Ensemble svgd_step(Ensemble ens, const TargetModel& target, const KernelSpec& kernel,
                          const StepConfig& cfg, CostCounters& ctr) {
  cfg.validate();
  const FieldPair f = compute_fields(ens, target, kernel, cfg, ctr);
  ens.particles += cfg.h * (f.drift + f.repulsion);
  ens.iteration += 1;
  detail::require_finite(ens.particles, "svgd_step");
  return ens;
}

// Symmetric composition: m' repulsion substeps of size h/(2m'), a full drift
// step, then m' more repulsion substeps. Every field is recomputed at the
// current state.
inline Ensemble strang_step(Ensemble ens, const TargetModel& target, const KernelSpec& kernel,
                            const StepConfig& cfg, CostCounters& ctr, int half_substeps) {
  cfg.validate();
  if (half_substeps < 1) throw ConfigError("strang_step: half_substeps must be >= 1");
  detail::require_finite(ens.particles, "strang_step");
  Matrix& x = ens.particles;
  const double tau = cfg.h / (2.0 * half_substeps);
  for (int s = 0; s < half_substeps; ++s) x += tau * detail::repulsion_field(x, kernel, ctr);
  x += cfg.h * detail::drift_field(x, target, kernel, cfg, ctr);
  for (int s = 0; s < half_substeps; ++s) x += tau * detail::repulsion_field(x, kernel, ctr);
  ens.iteration += 1;
  detail::require_finite(x, "strang_step");
  return ens;
}

inline Ensemble strang_step(Ensemble ens, const TargetModel& target, const KernelSpec& kernel,
                            const StepConfig& cfg, CostCounters& ctr) {
  return strang_step(std::move(ens), target, kernel, cfg, ctr, cfg.strang_half_substeps);
}

// Fixed multirate step: m_fixed repulsion Euler substeps of size h/m_fixed
// (field recomputed each substep), then one coarse drift step of size h.
// Per macro step: kernel_evals += m_fixed * N^2, grad_evals += N.
inline Ensemble mr_svgd_step(Ensemble ens, const TargetModel& target, const KernelSpec& kernel,
                             const StepConfig& cfg, CostCounters& ctr) {
  cfg.validate();
  detail::require_finite(ens.particles, "mr_svgd_step");
  Matrix& x = ens.particles;
  const double tau = cfg.h / static_cast<double>(cfg.m_fixed);
  for (int s = 0; s < cfg.m_fixed; ++s) x += tau * detail::repulsion_field(x, kernel, ctr);
  x += cfg.h * detail::drift_field(x, target, kernel, cfg, ctr);
  ens.iteration += 1;
  detail::require_finite(x, "mr_svgd_step");
  return ens;
}

// Smallest integer m with m^2 >= rho/tol, clipped to [m_min, m_max]. The
// correction loops pin the exact integer ceil of the square root.
inline int substep_controller(double rho, double tol, int m_min, int m_max) {
  if (!(tol > 0.0) || !(rho >= 0.0)) throw ConfigError("substep_controller: need rho >= 0, tol > 0");
  if (m_min < 1 || m_max < m_min) throw ConfigError("substep_controller: bad bounds");
  const double ratio = rho / tol;
  const double cap = static_cast<double>(m_max);
  long m;
  if (!(ratio < cap * cap)) {
    m = m_max;
  } else {
    m = static_cast<long>(std::ceil(std::sqrt(ratio)));
    while (m > 0 && static_cast<double>(m - 1) * static_cast<double>(m - 1) >= ratio) --m;
    while (static_cast<double>(m) * static_cast<double>(m) < ratio) ++m;
  }
  return static_cast<int>(std::clamp(m, static_cast<long>(m_min), static_cast<long>(m_max)));
}

// Adaptive multirate step: one repulsion step of size h, a step-doubling
// error estimate on the drift, then the controlled number of drift
// substeps. When m <= 2 the already computed half-step solution is reused.
// Per macro step: kernel_evals += N^2; grad_evals += 2N, or (2+m)N when the
// controller asks for fresh substeps.
inline std::pair<Ensemble, AdaptReport> adapt_mr_svgd_step(Ensemble ens, const TargetModel& target,
                                                           const KernelSpec& kernel,
                                                           const StepConfig& cfg,
                                                           CostCounters& ctr) {
  cfg.validate();
  detail::require_finite(ens.particles, "adapt_mr_svgd_step");
  const double h = cfg.h;

  Matrix x = ens.particles;
  x += h * detail::repulsion_field(x, kernel, ctr);

  const Matrix f = detail::drift_field(x, target, kernel, cfg, ctr);
  const Matrix x_full = x + h * f;
  const Matrix x_half = x + (0.5 * h) * f;
  const Matrix f_half = detail::drift_field(x_half, target, kernel, cfg, ctr);
  const Matrix x_tilde = x_half + (0.5 * h) * f_half;

  AdaptReport report;
  report.rho = (x_tilde - x_full).norm() / (x.norm() + cfg.eps);
  if (!std::isfinite(report.rho))
    throw DivergedError("adapt_mr_svgd_step: non-finite error indicator");
  report.m_chosen = substep_controller(report.rho, cfg.tol, cfg.m_min, cfg.m_max);

  if (report.m_chosen <= 2) {
    report.reused_predictor = true;
    ens.particles = x_tilde;
  } else {
    report.reused_predictor = false;
    const double tau = h / static_cast<double>(report.m_chosen);
    for (int s = 0; s < report.m_chosen; ++s)
      x += tau * detail::drift_field(x, target, kernel, cfg, ctr);
    ens.particles = x;
  }
  ens.iteration += 1;
  detail::require_finite(ens.particles, "adapt_mr_svgd_step");
  return {std::move(ens), report};
}

namespace detail {

inline Vector chain_gradient(const ChainState& chain, const TargetModel& target, RngStream& rng,
                             CostCounters& ctr) {
  ctr.grad_evals += 1;
  ctr.grad_batches += 1;
  if (chain.minibatch_fraction < 1.0) {
    if (const auto* pred = dynamic_cast<const PredictiveTarget*>(&target)) {
      const Index n = pred->train_size();
      const Index b = std::max<Index>(1, static_cast<Index>(std::ceil(chain.minibatch_fraction * n)));
      std::vector<Index> all(n);
      for (Index i = 0; i < n; ++i) all[i] = i;
      for (Index i = 0; i < b; ++i) {
        const Index r = i + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n - i)));
        std::swap(all[i], all[r]);
      }
      all.resize(b);
      return pred->score_minibatch(chain.position, all);
    }
  }
  return target.score(chain.position);
}

}  // namespace detail

// x <- x + eta * grad log p(x) + sqrt(2 eta) * xi. noise_override is a test
// hook for the deterministic part.
inline ChainState sgld_step(ChainState chain, const TargetModel& target, RngStream& rng,
                            CostCounters& ctr, const Vector* noise_override = nullptr) {
  if (chain.eta <= 0.0) throw ConfigError("sgld_step: eta must be positive");
  const Vector g = detail::chain_gradient(chain, target, rng, ctr);
  const double scale = std::sqrt(2.0 * chain.eta);
  for (Index i = 0; i < chain.position.size(); ++i) {
    const double xi = noise_override ? (*noise_override)(i) : rng.normal();
    chain.position(i) += chain.eta * g(i) + scale * xi;
  }
  return chain;
}

// v <- beta v + eta * grad log p(x) + sqrt(2 alpha eta) * xi;  x <- x + v.
inline ChainState sghmc_step(ChainState chain, const TargetModel& target, RngStream& rng,
                             CostCounters& ctr, const Vector* noise_override = nullptr) {
  if (chain.eta <= 0.0) throw ConfigError("sghmc_step: eta must be positive");
  if (chain.alpha <= 0.0) throw ConfigError("sghmc_step: alpha must be positive");
  if (!(chain.beta > 0.0 && chain.beta < 1.0)) throw ConfigError("sghmc_step: beta must be in (0,1)");
  if (chain.momentum.size() != chain.position.size()) chain.momentum = Vector::Zero(chain.position.size());
  const Vector g = detail::chain_gradient(chain, target, rng, ctr);
  const double scale = std::sqrt(2.0 * chain.alpha * chain.eta);
  for (Index i = 0; i < chain.position.size(); ++i) {
    const double xi = noise_override ? (*noise_override)(i) : rng.normal();
    chain.momentum(i) = chain.beta * chain.momentum(i) + chain.eta * g(i) + scale * xi;
    chain.position(i) += chain.momentum(i);
  }
  return chain;
}

}  // namespace svmr
