#pragma once

#include "svmr/target.hpp"

#include <cmath>
#include <numbers>

namespace svmr {

// Equal-weight isotropic Gaussian mixture; nearest-center assignment drives
// the mode-coverage metrics.
struct MixtureSpec {
  Matrix centers;        // K x d
  double component_std = 1.0;

  Index num_modes() const { return centers.rows(); }
};

class GaussianMixtureTarget final : public TargetModel {
 public:
  GaussianMixtureTarget(std::string name, MixtureSpec spec)
      : name_(std::move(name)), spec_(std::move(spec)) {
    if (spec_.centers.rows() < 1) throw ConfigError("mixture: needs at least one center");
    if (spec_.component_std <= 0.0) throw ConfigError("mixture: component std must be positive");
    const double s2 = spec_.component_std * spec_.component_std;
    const double d = static_cast<double>(spec_.centers.cols());
    log_comp_norm_ = -0.5 * d * std::log(2.0 * std::numbers::pi * s2);
  }

  Index dim() const override { return spec_.centers.cols(); }
  std::string name() const override { return name_; }

  double log_density(const Vector& x) const override {
    return logsumexp_components(x) - std::log(static_cast<double>(spec_.num_modes()));
  }

  // Responsibility-weighted score, assembled in log space so it stays finite
  // far from every center.
  Vector score(const Vector& x) const override {
    const Index k = spec_.num_modes();
    const double s2 = spec_.component_std * spec_.component_std;
    Vector logs(k);
    for (Index i = 0; i < k; ++i) logs(i) = component_log(x, i);
    const double m = logs.maxCoeff();
    Vector s = Vector::Zero(x.size());
    double wsum = 0.0;
    for (Index i = 0; i < k; ++i) {
      const double w = std::exp(logs(i) - m);
      wsum += w;
      s += w * (spec_.centers.row(i).transpose() - x) / s2;
    }
    return s / wsum;
  }

  const MixtureSpec& spec() const { return spec_; }

 private:
  double component_log(const Vector& x, Index i) const {
    const double s2 = spec_.component_std * spec_.component_std;
    return log_comp_norm_ - (x - spec_.centers.row(i).transpose()).squaredNorm() / (2.0 * s2);
  }

  double logsumexp_components(const Vector& x) const {
    const Index k = spec_.num_modes();
    double m = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < k; ++i) m = std::max(m, component_log(x, i));
    double acc = 0.0;
    for (Index i = 0; i < k; ++i) acc += std::exp(component_log(x, i) - m);
    return m + std::log(acc);
  }

  std::string name_;
  MixtureSpec spec_;
  double log_comp_norm_;
};

// Eight equal-weight modes on a ring of radius 4, equally spaced.
inline std::pair<std::shared_ptr<TargetModel>, MixtureSpec> make_mix8(double component_std = 0.5) {
  MixtureSpec spec;
  spec.component_std = component_std;
  spec.centers = Matrix::Zero(8, 2);
  for (Index k = 0; k < 8; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / 8.0;
    spec.centers(k, 0) = 4.0 * std::cos(angle);
    spec.centers(k, 1) = 4.0 * std::sin(angle);
  }
  auto target = std::make_shared<GaussianMixtureTarget>("mix8", spec);
  return {target, spec};
}

}  // namespace svmr
