#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace svmr {

// Particles are stored row-major, one particle per row, so pairwise kernel
// loops stream contiguous memory.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Invalid run/benchmark/kernel configuration. Maps to exit code 1 in the CLI.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed input data (bad label set, unparsable row, ...).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File-level failures. Maps to exit code 2 in the CLI.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A sampler step hit a non-finite state. The harness records this as a
// stop reason rather than treating it as a hard failure.
struct DivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace svmr
