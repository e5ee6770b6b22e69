#pragma once

#include "svmr/common.hpp"
#include "svmr/rng.hpp"

#include <cstdint>
#include <string>

namespace svmr {

// Particle state shared by all samplers: N rows, one particle per row.
struct Ensemble {
  Matrix particles;
  std::int64_t iteration = 0;

  Index n() const { return particles.rows(); }
  Index dim() const { return particles.cols(); }
};

// Stepper configuration: macro step, substep bounds and tolerance for the
// adaptive controller, and the score clip magnitude.
struct StepConfig {
  double h = 0.1;            // macro step size
  int m_fixed = 5;           // repulsion substeps for the fixed multirate step
  int m_min = 1;             // controller bounds
  int m_max = 16;
  double tol = 1e-3;         // target local error for the adaptive controller
  double eps = 1e-8;         // denominator guard in the error indicator
  double clip_bound = 50.0;  // scores are clipped to [-clip_bound, clip_bound]
  int strang_half_substeps = 1;

  // h = 0 is tolerated at the step level (degenerate identity step); the
  // harness requires a strictly positive macro step.
  void validate() const {
    if (h < 0.0) throw ConfigError("StepConfig: h must be nonnegative");
    if (m_fixed < 1) throw ConfigError("StepConfig: m_fixed must be >= 1");
    if (m_min < 1) throw ConfigError("StepConfig: m_min must be >= 1");
    if (m_max < m_min) throw ConfigError("StepConfig: m_max must be >= m_min");
    if (tol <= 0.0) throw ConfigError("StepConfig: tol must be positive");
    if (eps <= 0.0) throw ConfigError("StepConfig: eps must be positive");
    if (clip_bound <= 0.0) throw ConfigError("StepConfig: clip_bound must be positive");
    if (strang_half_substeps < 1) throw ConfigError("StepConfig: strang_half_substeps must be >= 1");
  }
};

// Exact work counters. grad_evals counts per-particle score evaluations,
// grad_batches counts batched score calls (one per field assembly),
// kernel_evals counts pairwise kernel-gradient table assemblies (N^2 each).
// Drift-only assemblies charge gradients but no kernel table; see samplers.
struct CostCounters {
  std::int64_t grad_evals = 0;
  std::int64_t grad_batches = 0;
  std::int64_t kernel_evals = 0;
  double wall_seconds = 0.0;
};

enum class InitKind { gaussian, point_cloud };

struct InitSpec {
  InitKind kind = InitKind::gaussian;
  double sigma0 = 1.0;  // gaussian: entries ~ sigma0 * N(0,1)

  static InitSpec parse(const std::string& name, double sigma0) {
    InitSpec spec;
    spec.sigma0 = sigma0;
    if (name == "gaussian") spec.kind = InitKind::gaussian;
    else if (name == "point") spec.kind = InitKind::point_cloud;
    else throw ConfigError("unknown initializer: " + name);
    return spec;
  }
};

// Pure function of (n, d, spec, seed): draws row by row from the "init"
// substream so other consumers of the same base seed are unaffected.
inline Ensemble init_ensemble(Index n, Index d, const InitSpec& spec, const RngStream& rng) {
  if (n < 1 || d < 1) throw ConfigError("init_ensemble: n and d must be >= 1");
  Ensemble ens;
  ens.particles = Matrix::Zero(n, d);
  ens.iteration = 0;
  if (spec.kind == InitKind::gaussian) {
    RngStream stream = rng.substream("init");
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) ens.particles(i, j) = spec.sigma0 * stream.normal();
  }
  return ens;
}

// Entrywise clip to [-clip_bound, clip_bound]. NaN entries pass through and
// are caught by the harness non-finite guard.
inline Matrix clip_scores(const Matrix& scores, double clip_bound) {
  if (clip_bound <= 0.0) throw ConfigError("clip_scores: clip_bound must be positive");
  Matrix out = scores;
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) {
      double v = out(i, j);
      if (v > clip_bound) out(i, j) = clip_bound;
      else if (v < -clip_bound) out(i, j) = -clip_bound;
    }
  return out;
}

}  // namespace svmr
