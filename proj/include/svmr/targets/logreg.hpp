#pragma once

#include "svmr/data_io.hpp"
#include "svmr/target.hpp"

#include <cmath>
#include <utility>

namespace svmr {

// Bayesian logistic regression with a Gaussian prior on the weights. The
// parameter vector is (w, b): a bias coordinate is appended here, not by the
// data loader.
class LogisticRegressionTarget final : public PredictiveTarget {
 public:
  LogisticRegressionTarget(Dataset train, Dataset validation, Dataset test, double prior_var)
      : train_(std::move(train)),
        validation_(std::move(validation)),
        test_(std::move(test)),
        prior_var_(prior_var) {
    if (prior_var_ <= 0.0) throw ConfigError("logreg: prior_var must be positive");
    check_labels(train_);
    check_labels(validation_);
    check_labels(test_);
  }

  Index dim() const override { return train_.p() + 1; }
  std::string name() const override { return "logreg"; }

  double log_density(const Vector& w) const override {
    double ll = 0.0;
    for (Index i = 0; i < train_.n(); ++i) {
      const double z = logit(w, train_, i);
      ll += train_.labels[i] == 1 ? log_sigmoid(z) : log_sigmoid(-z);
    }
    return ll - w.squaredNorm() / (2.0 * prior_var_);
  }

  Vector score(const Vector& w) const override {
    Vector g = -w / prior_var_;
    for (Index i = 0; i < train_.n(); ++i) accumulate_residual(w, train_, i, 1.0, g);
    return g;
  }

  Vector score_minibatch(const Vector& w, const std::vector<Index>& batch) const override {
    Vector g = -w / prior_var_;
    if (batch.empty()) return g;
    const double scale = static_cast<double>(train_.n()) / static_cast<double>(batch.size());
    for (Index i : batch) accumulate_residual(w, train_, i, scale, g);
    return g;
  }

  Index num_examples(Split split) const override { return part(split).n(); }

  double predict_proba(const Vector& w, Split split, Index example) const override {
    const double p = sigmoid(logit(w, part(split), example));
    return std::min(std::max(p, 1e-12), 1.0 - 1e-12);
  }

  std::vector<int> labels(Split split) const override { return part(split).labels; }

 private:
  static void check_labels(const Dataset& ds) {
    for (int y : ds.labels)
      if (y != 0 && y != 1) throw DataError("logreg: labels must be 0/1");
  }

  double logit(const Vector& w, const Dataset& ds, Index i) const {
    double z = w(ds.p());  // bias
    for (Index j = 0; j < ds.p(); ++j) z += w(j) * ds.features(i, j);
    return z;
  }

  void accumulate_residual(const Vector& w, const Dataset& ds, Index i, double scale,
                           Vector& g) const {
    const double r = scale * (static_cast<double>(ds.labels[i]) - sigmoid(logit(w, ds, i)));
    for (Index j = 0; j < ds.p(); ++j) g(j) += r * ds.features(i, j);
    g(ds.p()) += r;
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
  double prior_var_;
};

inline std::shared_ptr<PredictiveTarget> make_logreg(Dataset train, Dataset test,
                                                     double prior_var = 1.0) {
  Dataset empty;
  empty.features = Matrix::Zero(0, train.p());
  return std::make_shared<LogisticRegressionTarget>(std::move(train), std::move(empty),
                                                    std::move(test), prior_var);
}

inline std::shared_ptr<PredictiveTarget> make_logreg(const SplitResult& splits,
                                                     double prior_var = 1.0) {
  return std::make_shared<LogisticRegressionTarget>(splits.train, splits.validation, splits.test,
                                                    prior_var);
}

}  // namespace svmr
