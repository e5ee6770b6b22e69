#pragma once

#include "svmr/data_io.hpp"
#include "svmr/target.hpp"

#include <cmath>
#include <utility>

namespace svmr {

// One-hidden-layer Bayesian neural network for binary classification:
// logit(x) = w2' tanh(W1 x + b1) + b2, Gaussian prior on the flattened
// parameters. The score is assembled by manual backpropagation.
class BnnTarget final : public PredictiveTarget {
 public:
  BnnTarget(Dataset train, Dataset validation, Dataset test, Index width, double prior_var)
      : train_(std::move(train)),
        validation_(std::move(validation)),
        test_(std::move(test)),
        width_(width),
        prior_var_(prior_var) {
    if (width_ < 1) throw ConfigError("bnn: width must be >= 1");
    if (prior_var_ <= 0.0) throw ConfigError("bnn: prior_var must be positive");
  }

  // theta = [W1 (width x p, row major), b1 (width), w2 (width), b2]
  Index dim() const override { return width_ * train_.p() + 2 * width_ + 1; }
  std::string name() const override { return "bnn"; }

  double log_density(const Vector& theta) const override {
    double ll = 0.0;
    for (Index i = 0; i < train_.n(); ++i) {
      const double z = forward(theta, train_, i);
      ll += train_.labels[i] == 1 ? log_sigmoid(z) : log_sigmoid(-z);
    }
    return ll - theta.squaredNorm() / (2.0 * prior_var_);
  }

  Vector score(const Vector& theta) const override {
    Vector g = -theta / prior_var_;
    for (Index i = 0; i < train_.n(); ++i) backprop(theta, train_, i, 1.0, g);
    return g;
  }

  Vector score_minibatch(const Vector& theta, const std::vector<Index>& batch) const override {
    Vector g = -theta / prior_var_;
    if (batch.empty()) return g;
    const double scale = static_cast<double>(train_.n()) / static_cast<double>(batch.size());
    for (Index i : batch) backprop(theta, train_, i, scale, g);
    return g;
  }

  Index num_examples(Split split) const override { return part(split).n(); }

  double predict_proba(const Vector& theta, Split split, Index example) const override {
    const double p = sigmoid(forward(theta, part(split), example));
    return std::min(std::max(p, 1e-12), 1.0 - 1e-12);
  }

  std::vector<int> labels(Split split) const override { return part(split).labels; }

 private:
  double forward(const Vector& theta, const Dataset& ds, Index i) const {
    const Index p = ds.p();
    double out = theta(width_ * p + 2 * width_);  // b2
    for (Index h = 0; h < width_; ++h) {
      double a = theta(width_ * p + h);  // b1[h]
      for (Index j = 0; j < p; ++j) a += theta(h * p + j) * ds.features(i, j);
      out += theta(width_ * p + width_ + h) * std::tanh(a);
    }
    return out;
  }

  void backprop(const Vector& theta, const Dataset& ds, Index i, double scale, Vector& g) const {
    const Index p = ds.p();
    Vector act(width_), th(width_);
    double z = theta(width_ * p + 2 * width_);
    for (Index h = 0; h < width_; ++h) {
      double a = theta(width_ * p + h);
      for (Index j = 0; j < p; ++j) a += theta(h * p + j) * ds.features(i, j);
      act(h) = a;
      th(h) = std::tanh(a);
      z += theta(width_ * p + width_ + h) * th(h);
    }
    const double r = scale * (static_cast<double>(ds.labels[i]) - sigmoid(z));
    g(width_ * p + 2 * width_) += r;  // b2
    for (Index h = 0; h < width_; ++h) {
      const double w2h = theta(width_ * p + width_ + h);
      const double da = r * w2h * (1.0 - th(h) * th(h));
      g(width_ * p + width_ + h) += r * th(h);  // w2
      g(width_ * p + h) += da;                  // b1
      for (Index j = 0; j < p; ++j) g(h * p + j) += da * ds.features(i, j);
    }
  }

  const Dataset& part(Split split) const {
    switch (split) {
      case Split::train: return train_;
      case Split::validation: return validation_;
      case Split::test: return test_;
    }
    throw ConfigError("bad split");
  }

  Dataset train_;
  Dataset validation_;
  Dataset test_;
  Index width_;
  double prior_var_;
};

inline std::shared_ptr<PredictiveTarget> make_bnn(const SplitResult& splits, Index width = 32,
                                                  double prior_var = 1.0) {
  return std::make_shared<BnnTarget>(splits.train, splits.validation, splits.test, width,
                                     prior_var);
}

}  // namespace svmr
