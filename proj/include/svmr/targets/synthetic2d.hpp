#pragma once

#include "svmr/target.hpp"

#include <cmath>
#include <functional>
#include <utility>

namespace svmr {

namespace detail {

class Analytic2dTarget final : public TargetModel {
 public:
  using LogP = std::function<double(double, double)>;
  using Score = std::function<void(double, double, double&, double&)>;

  Analytic2dTarget(std::string name, LogP logp, Score score)
      : name_(std::move(name)), logp_(std::move(logp)), score_(std::move(score)) {}

  Index dim() const override { return 2; }
  std::string name() const override { return name_; }
  double log_density(const Vector& x) const override { return logp_(x(0), x(1)); }
  Vector score(const Vector& x) const override {
    Vector s(2);
    score_(x(0), x(1), s(0), s(1));
    return s;
  }

 private:
  std::string name_;
  LogP logp_;
  Score score_;
};

}  // namespace detail

struct Banana2dParams {
  double a = 2.0;
  double b = 0.3;
};
struct Ring2dParams {
  double radius = 3.0;
  double sigma = 0.25;
};
struct Squiggly2dParams {
  double omega = 2.0;
  double sigma = 0.3;
  double x_scale = 4.0;
};
struct TwoMoons2dParams {
  double cx = 1.0;
  double cy = -0.5;
  double radius = 2.0;
  double sigma = 0.35;
  double arc_concentration = 2.0;
};
struct Funnel2dParams {
  double sigma_v = 3.0;
};

inline std::shared_ptr<TargetModel> make_banana(const Banana2dParams& p = {}) {
  const double a2 = p.a * p.a, b = p.b;
  return std::make_shared<detail::Analytic2dTarget>(
      "banana",
      [a2, b](double x1, double x2) {
        const double u = x2 - b * x1 * x1 + a2 * b;
        return -x1 * x1 / (2.0 * a2) - 0.5 * u * u;
      },
      [a2, b](double x1, double x2, double& s1, double& s2) {
        const double u = x2 - b * x1 * x1 + a2 * b;
        s1 = -x1 / a2 + 2.0 * b * x1 * u;
        s2 = -u;
      });
}

inline std::shared_ptr<TargetModel> make_ring(const Ring2dParams& p = {}) {
  const double r0 = p.radius, s2 = p.sigma * p.sigma;
  return std::make_shared<detail::Analytic2dTarget>(
      "ring",
      [r0, s2](double x1, double x2) {
        const double r = std::hypot(x1, x2);
        return -(r - r0) * (r - r0) / (2.0 * s2);
      },
      [r0, s2](double x1, double x2, double& s1v, double& s2v) {
        const double r = std::hypot(x1, x2);
        if (r < 1e-12) {  // cusp at the origin
          s1v = s2v = 0.0;
          return;
        }
        const double g = -(r - r0) / (s2 * r);
        s1v = g * x1;
        s2v = g * x2;
      });
}

inline std::shared_ptr<TargetModel> make_squiggly(const Squiggly2dParams& p = {}) {
  const double w = p.omega, s2 = p.sigma * p.sigma, xs2 = p.x_scale * p.x_scale;
  return std::make_shared<detail::Analytic2dTarget>(
      "squiggly",
      [w, s2, xs2](double x1, double x2) {
        const double u = x2 - std::sin(w * x1);
        return -u * u / (2.0 * s2) - x1 * x1 / (2.0 * xs2);
      },
      [w, s2, xs2](double x1, double x2, double& s1v, double& s2v) {
        const double u = x2 - std::sin(w * x1);
        s1v = u * w * std::cos(w * x1) / s2 - x1 / xs2;
        s2v = -u / s2;
      });
}

// Two curved-Gaussian arcs: component + is a ring slice around (cx, cy)
// gated toward +e2 by a von Mises factor, component - is its image under
// point reflection through the origin, so log p(x) = log p(-x).
inline std::shared_ptr<TargetModel> make_two_moons(const TwoMoons2dParams& p = {}) {
  const double cx = p.cx, cy = p.cy, r = p.radius, s2 = p.sigma * p.sigma,
               kappa = p.arc_concentration;
  auto comp_logp = [cx, cy, r, s2, kappa](double x1, double x2) {
    const double u1 = x1 - cx, u2 = x2 - cy;
    const double d = std::max(std::hypot(u1, u2), 1e-12);
    return -(d - r) * (d - r) / (2.0 * s2) + kappa * u2 / d;
  };
  auto comp_score = [cx, cy, r, s2, kappa](double x1, double x2, double& g1, double& g2) {
    const double u1 = x1 - cx, u2 = x2 - cy;
    const double d = std::max(std::hypot(u1, u2), 1e-12);
    const double ring = -(d - r) / (s2 * d);
    g1 = ring * u1 + kappa * (-u2 * u1 / (d * d * d));
    g2 = ring * u2 + kappa * (1.0 / d - u2 * u2 / (d * d * d));
  };
  auto logp = [comp_logp](double x1, double x2) {
    const double la = comp_logp(x1, x2);
    const double lb = comp_logp(-x1, -x2);
    const double m = std::max(la, lb);
    return m + std::log(0.5 * (std::exp(la - m) + std::exp(lb - m)));
  };
  auto score = [comp_logp, comp_score](double x1, double x2, double& s1, double& s2v) {
    const double la = comp_logp(x1, x2);
    const double lb = comp_logp(-x1, -x2);
    const double m = std::max(la, lb);
    const double wa = std::exp(la - m), wb = std::exp(lb - m);
    double a1, a2, b1, b2;
    comp_score(x1, x2, a1, a2);
    comp_score(-x1, -x2, b1, b2);  // chain rule flips the sign of the reflected gradient
    s1 = (wa * a1 - wb * b1) / (wa + wb);
    s2v = (wa * a2 - wb * b2) / (wa + wb);
  };
  return std::make_shared<detail::Analytic2dTarget>("two-moons", logp, score);
}

// Neal's funnel, 2D form with v = x2.
inline std::shared_ptr<TargetModel> make_funnel(const Funnel2dParams& p = {}) {
  const double sv2 = p.sigma_v * p.sigma_v;
  return std::make_shared<detail::Analytic2dTarget>(
      "funnel",
      [sv2](double x1, double v) {
        return -v * v / (2.0 * sv2) - x1 * x1 / (2.0 * std::exp(v)) - 0.5 * v;
      },
      [sv2](double x1, double v, double& s1, double& s2) {
        const double inv_ev = std::exp(-v);
        s1 = -x1 * inv_ev;
        s2 = -v / sv2 + 0.5 * x1 * x1 * inv_ev - 0.5;
      });
}

inline std::shared_ptr<TargetModel> make_2d_target(const std::string& name) {
  if (name == "banana") return make_banana();
  if (name == "ring") return make_ring();
  if (name == "squiggly") return make_squiggly();
  if (name == "two-moons") return make_two_moons();
  if (name == "funnel") return make_funnel();
  throw ConfigError("unknown 2d target: " + name);
}

}  // namespace svmr
