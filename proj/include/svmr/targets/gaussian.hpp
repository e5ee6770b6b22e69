#pragma once

#include "svmr/target.hpp"

#include <cmath>
#include <numbers>

namespace svmr {

// Diagonal Gaussian with known moments; covers the standard test target and
// the anisotropic 50D benchmark.
class DiagonalGaussianTarget final : public TargetModel {
 public:
  DiagonalGaussianTarget(std::string name, Vector mean, Vector variances)
      : name_(std::move(name)), mean_(std::move(mean)), var_(std::move(variances)) {
    if (mean_.size() != var_.size()) throw ConfigError("gaussian: mean/variance size mismatch");
    log_norm_ = 0.0;
    for (Index i = 0; i < var_.size(); ++i) {
      if (var_(i) <= 0.0) throw ConfigError("gaussian: variances must be positive");
      log_norm_ += 0.5 * std::log(2.0 * std::numbers::pi * var_(i));
    }
  }

  Index dim() const override { return mean_.size(); }
  std::string name() const override { return name_; }

  double log_density(const Vector& x) const override {
    double q = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
      const double r = x(i) - mean_(i);
      q += r * r / var_(i);
    }
    return -0.5 * q - log_norm_;
  }

  Vector score(const Vector& x) const override {
    Vector s(x.size());
    for (Index i = 0; i < x.size(); ++i) s(i) = -(x(i) - mean_(i)) / var_(i);
    return s;
  }

  bool has_reference_moments() const override { return true; }
  Vector reference_mean() const override { return mean_; }
  Matrix reference_cov() const override {
    Matrix cov = Matrix::Zero(var_.size(), var_.size());
    for (Index i = 0; i < var_.size(); ++i) cov(i, i) = var_(i);
    return cov;
  }

 private:
  std::string name_;
  Vector mean_;
  Vector var_;
  double log_norm_;
};

inline std::shared_ptr<TargetModel> make_std_gauss(Index d) {
  return std::make_shared<DiagonalGaussianTarget>("std-gauss", Vector::Zero(d), Vector::Ones(d));
}

// Anisotropic Gaussian: mean (1,...,1)/sqrt(d), diagonal covariance with
// eigenvalues log-spaced over [1/sqrt(kappa), sqrt(kappa)].
inline std::shared_ptr<TargetModel> make_gauss50(Index d = 50, double condition_number = 100.0) {
  if (d < 2) throw ConfigError("gauss50: d must be >= 2");
  if (condition_number < 1.0) throw ConfigError("gauss50: condition number must be >= 1");
  Vector mean = Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  Vector var(d);
  const double lo = std::log(1.0 / std::sqrt(condition_number));
  const double hi = std::log(std::sqrt(condition_number));
  for (Index i = 0; i < d; ++i) {
    const double t = (d == 1) ? 0.0 : static_cast<double>(i) / static_cast<double>(d - 1);
    var(i) = std::exp(lo + t * (hi - lo));
  }
  return std::make_shared<DiagonalGaussianTarget>("gauss50", std::move(mean), std::move(var));
}

}  // namespace svmr
