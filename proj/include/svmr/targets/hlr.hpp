#pragma once

#include "svmr/hlr_model.hpp"
#include "svmr/rng.hpp"
#include "svmr/target.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace svmr {

// Simulates a grouped logistic-regression instance: sparse +/- features,
// group indices from a Zipf-like or uniform law, true parameters from the
// model priors, labels from the induced Bernoulli probabilities.
inline HlrModel hlr_generate(Index n, Index p, Index num_groups, const std::string& group_law,
                             double sparsity, std::uint64_t seed, double sigma_beta = 1.0,
                             double sigma_alpha = 1.0, double mu_tau = 0.0,
                             double sigma_tau = 0.5) {
  if (n < 1 || p < 1 || num_groups < 1) throw ConfigError("hlr_generate: n, p, G must be >= 1");
  if (sparsity <= 0.0 || sparsity > 1.0) throw ConfigError("hlr_generate: sparsity in (0,1]");
  if (group_law != "long-tail" && group_law != "uniform")
    throw ConfigError("hlr_generate: unknown group law " + group_law);

  HlrModel m;
  m.n = n;
  m.p = p;
  m.num_groups = num_groups;
  m.seed = seed;
  m.group_law = group_law;
  m.sparsity = sparsity;
  m.sigma_beta = sigma_beta;
  m.sigma_alpha = sigma_alpha;
  m.mu_tau = mu_tau;
  m.sigma_tau = sigma_tau;

  RngStream base(seed);
  RngStream params = base.substream("hlr-params");
  m.true_beta.resize(p);
  for (Index j = 0; j < p; ++j) m.true_beta(j) = sigma_beta * params.normal();
  m.true_alpha = sigma_alpha * params.normal();
  m.true_z.resize(num_groups);
  for (Index j = 0; j < num_groups; ++j) m.true_z(j) = params.normal();
  m.true_log_tau = mu_tau + sigma_tau * params.normal();

  // Features: k nonzeros per row at distinct columns, values +/- 1/sqrt(p*density).
  RngStream feat = base.substream("hlr-features");
  const Index k = std::max<Index>(1, static_cast<Index>(std::llround(sparsity * p)));
  const double magnitude = 1.0 / std::sqrt(static_cast<double>(p) * sparsity);
  m.features.rows = n;
  m.features.cols = p;
  m.features.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  m.features.col.reserve(static_cast<std::size_t>(n) * k);
  m.features.val.reserve(static_cast<std::size_t>(n) * k);
  std::vector<Index> cols(p);
  std::iota(cols.begin(), cols.end(), 0);
  for (Index i = 0; i < n; ++i) {
    for (Index s = 0; s < k; ++s) {  // partial Fisher-Yates
      const Index r = s + static_cast<Index>(feat.uniform_index(p - s));
      std::swap(cols[s], cols[r]);
    }
    std::sort(cols.begin(), cols.begin() + k);
    for (Index s = 0; s < k; ++s) {
      m.features.col.push_back(cols[s]);
      m.features.val.push_back(feat.uniform() < 0.5 ? magnitude : -magnitude);
    }
    m.features.row_ptr[i + 1] = m.features.row_ptr[i] + k;
  }

  // Group indices: Zipf(1) for the long-tail law.
  RngStream grp = base.substream("hlr-groups");
  m.groups.resize(n);
  if (group_law == "uniform") {
    for (Index i = 0; i < n; ++i) m.groups[i] = static_cast<std::int64_t>(grp.uniform_index(num_groups));
  } else {
    std::vector<double> cum(num_groups);
    double acc = 0.0;
    for (Index j = 0; j < num_groups; ++j) {
      acc += 1.0 / static_cast<double>(j + 1);
      cum[j] = acc;
    }
    for (Index i = 0; i < n; ++i) {
      const double u = grp.uniform() * acc;
      m.groups[i] = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
    }
  }

  RngStream lab = base.substream("hlr-labels");
  const double tau = std::exp(m.true_log_tau);
  m.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double logit = m.true_alpha + m.features.row_dot(i, m.true_beta) + tau * m.true_z(m.groups[i]);
    m.labels[i] = lab.uniform() < sigmoid(logit) ? 1 : 0;
  }
  return m;
}

// Posterior over theta = (beta, alpha, z, log tau) with the non-centered
// group effects u_g = tau * z_g, tau = exp(log tau). Likelihood runs over a
// seeded train partition; held-out rows feed the predictive metrics.
class HlrTarget final : public PredictiveTarget {
 public:
  explicit HlrTarget(HlrModel model, double train_fraction = 0.8)
      : model_(std::move(model)) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
      throw ConfigError("hlr target: train_fraction in (0,1)");
    std::vector<Index> perm(model_.n);
    std::iota(perm.begin(), perm.end(), 0);
    RngStream stream = RngStream(model_.seed).substream("data-split");
    for (Index i = model_.n - 1; i > 0; --i) {
      const Index j = static_cast<Index>(stream.uniform_index(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
    const Index n_train = std::max<Index>(1, static_cast<Index>(std::floor(train_fraction * model_.n)));
    if (n_train >= model_.n) throw ConfigError("hlr target: test split is empty");
    train_rows_.assign(perm.begin(), perm.begin() + n_train);
    test_rows_.assign(perm.begin() + n_train, perm.end());
  }

  Index dim() const override { return model_.theta_dim(); }
  std::string name() const override { return "hlr"; }

  double log_density(const Vector& theta) const override {
    const View v = view(theta);
    double ll = 0.0;
    for (Index row : train_rows_) {
      const double z = row_logit(theta, v, row);
      ll += model_.labels[row] == 1 ? log_sigmoid(z) : log_sigmoid(-z);
    }
    double prior = -theta.segment(0, model_.p).squaredNorm() / (2.0 * model_.sigma_beta * model_.sigma_beta);
    prior -= v.alpha * v.alpha / (2.0 * model_.sigma_alpha * model_.sigma_alpha);
    prior -= theta.segment(model_.p + 1, model_.num_groups).squaredNorm() / 2.0;
    const double dt = v.log_tau - model_.mu_tau;
    prior -= dt * dt / (2.0 * model_.sigma_tau * model_.sigma_tau);
    return ll + prior;
  }

  Vector score(const Vector& theta) const override { return score_rows(theta, train_rows_, 1.0); }

  Vector score_minibatch(const Vector& theta, const std::vector<Index>& batch) const override {
    if (batch.empty()) return score_prior_only(theta);
    std::vector<Index> rows;
    rows.reserve(batch.size());
    for (Index b : batch) rows.push_back(train_rows_[b]);
    const double scale = static_cast<double>(train_rows_.size()) / static_cast<double>(batch.size());
    return score_rows(theta, rows, scale);
  }

  Index num_examples(Split split) const override {
    switch (split) {
      case Split::train: return static_cast<Index>(train_rows_.size());
      case Split::validation: return 0;
      case Split::test: return static_cast<Index>(test_rows_.size());
    }
    return 0;
  }

  double predict_proba(const Vector& theta, Split split, Index example) const override {
    const Index row = split == Split::train ? train_rows_[example] : test_rows_[example];
    const double p = sigmoid(row_logit(theta, view(theta), row));
    return std::min(std::max(p, 1e-12), 1.0 - 1e-12);
  }

  std::vector<int> labels(Split split) const override {
    const auto& rows = split == Split::train ? train_rows_ : test_rows_;
    std::vector<int> out;
    out.reserve(rows.size());
    for (Index r : rows) out.push_back(model_.labels[r]);
    return out;
  }

  const HlrModel& model() const { return model_; }

 private:
  struct View {
    double alpha;
    double log_tau;
    double tau;
  };

  View view(const Vector& theta) const {
    View v;
    v.alpha = theta(model_.p);
    v.log_tau = theta(model_.p + 1 + model_.num_groups);
    v.tau = std::exp(v.log_tau);
    return v;
  }

  double row_logit(const Vector& theta, const View& v, Index row) const {
    double z = v.alpha + v.tau * theta(model_.p + 1 + model_.groups[row]);
    const auto& f = model_.features;
    for (std::int64_t k = f.row_ptr[row]; k < f.row_ptr[row + 1]; ++k)
      z += f.val[k] * theta(f.col[k]);
    return z;
  }

  Vector score_prior_only(const Vector& theta) const {
    const View v = view(theta);
    Vector g = Vector::Zero(theta.size());
    g.segment(0, model_.p) = -theta.segment(0, model_.p) / (model_.sigma_beta * model_.sigma_beta);
    g(model_.p) = -v.alpha / (model_.sigma_alpha * model_.sigma_alpha);
    g.segment(model_.p + 1, model_.num_groups) = -theta.segment(model_.p + 1, model_.num_groups);
    g(model_.p + 1 + model_.num_groups) = -(v.log_tau - model_.mu_tau) / (model_.sigma_tau * model_.sigma_tau);
    return g;
  }

  Vector score_rows(const Vector& theta, const std::vector<Index>& rows, double scale) const {
    const View v = view(theta);
    Vector g = score_prior_only(theta);
    const auto& f = model_.features;
    double dlog_tau = 0.0;
    for (Index row : rows) {
      const double r = scale * (static_cast<double>(model_.labels[row]) - sigmoid(row_logit(theta, v, row)));
      for (std::int64_t k = f.row_ptr[row]; k < f.row_ptr[row + 1]; ++k) g(f.col[k]) += r * f.val[k];
      g(model_.p) += r;
      const Index group_idx = model_.p + 1 + model_.groups[row];
      g(group_idx) += r * v.tau;
      dlog_tau += r * theta(group_idx);
    }
    g(model_.p + 1 + model_.num_groups) += dlog_tau * v.tau;
    return g;
  }

  HlrModel model_;
  std::vector<Index> train_rows_;
  std::vector<Index> test_rows_;
};

inline std::shared_ptr<PredictiveTarget> make_hlr_target(HlrModel model,
                                                         double train_fraction = 0.8) {
  return std::make_shared<HlrTarget>(std::move(model), train_fraction);
}

}  // namespace svmr
