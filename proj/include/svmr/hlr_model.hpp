#pragma once

#include "svmr/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace svmr {

// Compressed sparse rows; enough structure for the sparse logit products.
struct SparseRows {
  Index rows = 0;
  Index cols = 0;
  std::vector<std::int64_t> row_ptr;  // size rows + 1
  std::vector<std::int64_t> col;
  std::vector<double> val;

  double row_dot(Index i, const Vector& x) const {
    double acc = 0.0;
    for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) acc += val[k] * x(col[k]);
    return acc;
  }
};

// Generated hierarchical logistic-regression instance: data, group indices,
// hyperparameters, and the true parameters it was simulated from. The
// sampled parameter vector is theta = (beta, alpha, z, log tau) with
// dimension p + 1 + G + 1.
struct HlrModel {
  Index n = 0;
  Index p = 0;
  Index num_groups = 0;
  SparseRows features;
  std::vector<int> labels;          // 0/1
  std::vector<std::int64_t> groups; // 0-based group index per observation

  double sigma_beta = 1.0;
  double sigma_alpha = 1.0;
  double mu_tau = 0.0;
  double sigma_tau = 0.5;

  Vector true_beta;
  double true_alpha = 0.0;
  Vector true_z;
  double true_log_tau = 0.0;

  std::uint64_t seed = 0;
  std::string group_law = "long-tail";
  double sparsity = 0.05;

  Index theta_dim() const { return p + 1 + num_groups + 1; }
};

}  // namespace svmr
