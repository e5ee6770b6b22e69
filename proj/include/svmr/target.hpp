#pragma once

#include "svmr/common.hpp"

#include <memory>
#include <string>
#include <vector>

namespace svmr {

// A target density on R^d with analytic log-density and score. Targets are
// immutable after construction; evaluation is reentrant.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual Index dim() const = 0;
  virtual std::string name() const = 0;
  virtual double log_density(const Vector& x) const = 0;
  virtual Vector score(const Vector& x) const = 0;

  // Reference moments, when the target knows them (Gaussians).
  virtual bool has_reference_moments() const { return false; }
  virtual Vector reference_mean() const { throw ConfigError("no reference moments"); }
  virtual Matrix reference_cov() const { throw ConfigError("no reference moments"); }
};

enum class Split { train, validation, test };

// A posterior over model parameters together with held-out data and a
// per-example predictive probability, for the NLL/accuracy/ECE metrics.
class PredictiveTarget : public TargetModel {
 public:
  virtual Index num_examples(Split split) const = 0;

  // Posterior predictive probability of label 1 for one example under a
  // single parameter vector.
  virtual double predict_proba(const Vector& theta, Split split, Index example) const = 0;

  // Labels of a split, as 0/1 values.
  virtual std::vector<int> labels(Split split) const = 0;

  virtual Index train_size() const { return num_examples(Split::train); }

  // Subsampled-likelihood score: likelihood terms of the given train rows
  // rescaled by n/|batch|, plus the full prior. Default full batch.
  virtual Vector score_minibatch(const Vector& theta, const std::vector<Index>& batch) const {
    (void)batch;
    return score(theta);
  }
};

inline double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log sigma(z), stable for large |z|.
inline double log_sigmoid(double z) {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

}  // namespace svmr
