#pragma once

#include "svmr/common.hpp"
#include "svmr/hlr_model.hpp"
#include "svmr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace svmr {

struct Dataset {
  std::string name;
  Matrix features;          // n x p
  std::vector<int> labels;  // 0/1
  // Train-split standardization statistics, filled by standardize_and_split.
  Vector column_mean;
  Vector column_std;
  bool standardized = false;

  Index n() const { return features.rows(); }
  Index p() const { return features.cols(); }
};

struct SplitSpec {
  double train_fraction = 0.8;
  double validation_fraction = 0.0;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (train_fraction <= 0.0 || test_fraction <= 0.0 || validation_fraction < 0.0)
      throw ConfigError("SplitSpec: train/test fractions must be positive");
    const double sum = train_fraction + validation_fraction + test_fraction;
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("SplitSpec: fractions must sum to 1");
  }
};

struct CsvOptions {
  bool has_header = false;
  int label_column = -1;  // negative counts from the end
};

namespace detail {

// Maps the raw label set onto {0,1}: {-1,+1} and {0,1} keep their order,
// arbitrary two-class strings map the lexicographically smaller one to 0.
inline std::vector<int> map_labels(const std::vector<std::string>& raw) {
  std::set<std::string> classes(raw.begin(), raw.end());
  if (classes.size() > 2) throw DataError("dataset has more than two classes");
  if (classes.size() < 1) throw DataError("dataset has no labels");

  auto as_number = [](const std::string& s) -> std::optional<double> {
    try {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size()) return std::nullopt;
      return v;
    } catch (...) {
      return std::nullopt;
    }
  };

  std::map<std::string, int> mapping;
  bool all_numeric = true;
  for (const auto& c : classes)
    if (!as_number(c)) all_numeric = false;

  if (all_numeric) {
    for (const auto& c : classes) {
      const double v = *as_number(c);
      if (v == 1.0) mapping[c] = 1;
      else if (v == 0.0 || v == -1.0) mapping[c] = 0;
      else throw DataError("numeric labels must come from {-1,+1} or {0,1}, got " + c);
    }
  } else {
    int next = 0;
    for (const auto& c : classes) mapping[c] = next++;  // set is sorted
  }

  std::vector<int> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(mapping.at(r));
  return out;
}

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, delim)) fields.push_back(cur);
  if (!line.empty() && line.back() == delim) fields.push_back("");
  return fields;
}

inline double parse_value(const std::string& s, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing chars");
    return v;
  } catch (...) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse value '" + s + "'");
  }
}

}  // namespace detail

inline Dataset load_csv(const std::string& path, const CsvOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  Index width = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (opts.has_header && line_no == 1) continue;
    if (line.empty()) continue;
    auto fields = detail::split_fields(line, ',');
    if (width < 0) width = static_cast<Index>(fields.size());
    if (static_cast<Index>(fields.size()) != width)
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                      " fields, got " + std::to_string(fields.size()));
    int label_idx = opts.label_column >= 0 ? opts.label_column
                                           : static_cast<int>(fields.size()) + opts.label_column;
    if (label_idx < 0 || label_idx >= static_cast<int>(fields.size()))
      throw DataError("line " + std::to_string(line_no) + ": label column out of range");
    std::vector<double> row;
    row.reserve(fields.size() - 1);
    for (int i = 0; i < static_cast<int>(fields.size()); ++i) {
      if (i == label_idx) raw_labels.push_back(fields[i]);
      else row.push_back(detail::parse_value(fields[i], line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  Dataset ds;
  ds.name = path;
  ds.features = Matrix::Zero(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (Index i = 0; i < ds.features.rows(); ++i)
    for (Index j = 0; j < ds.features.cols(); ++j) ds.features(i, j) = rows[i][j];
  ds.labels = detail::map_labels(raw_labels);
  if (!ds.features.allFinite()) throw DataError(path + ": non-finite feature value");
  return ds;
}

// "<label> <index>:<value> ..." with 1-based indices.
inline Dataset load_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<std::pair<Index, double>>> rows;
  std::vector<std::string> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  Index max_col = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string tok;
    if (!(is >> tok)) continue;
    raw_labels.push_back(tok);
    std::vector<std::pair<Index, double>> row;
    while (is >> tok) {
      auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw DataError("line " + std::to_string(line_no) + ": expected index:value, got '" + tok + "'");
      Index idx;
      try {
        idx = static_cast<Index>(std::stoll(tok.substr(0, colon)));
      } catch (...) {
        throw DataError("line " + std::to_string(line_no) + ": bad index in '" + tok + "'");
      }
      if (idx < 1) throw DataError("line " + std::to_string(line_no) + ": indices are 1-based");
      double v = detail::parse_value(tok.substr(colon + 1), line_no);
      row.emplace_back(idx - 1, v);
      max_col = std::max(max_col, idx);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  Dataset ds;
  ds.name = path;
  ds.features = Matrix::Zero(static_cast<Index>(rows.size()), max_col);
  for (Index i = 0; i < ds.features.rows(); ++i)
    for (const auto& [c, v] : rows[i]) ds.features(i, c) = v;
  ds.labels = detail::map_labels(raw_labels);
  if (!ds.features.allFinite()) throw DataError(path + ": non-finite feature value");
  return ds;
}

inline Dataset load_dataset(const std::string& path, const std::string& format,
                            const CsvOptions& csv_opts = {}) {
  if (format == "csv") return load_csv(path, csv_opts);
  if (format == "libsvm" || format == "libsvm-sparse-text") return load_libsvm(path);
  throw ConfigError("unknown dataset format: " + format);
}

// Sparse text writer; %.17g keeps the round trip lossless.
inline void save_libsvm(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  char buf[64];
  for (Index i = 0; i < ds.n(); ++i) {
    out << ds.labels[i];
    for (Index j = 0; j < ds.p(); ++j) {
      if (ds.features(i, j) != 0.0) {
        std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, j));
        out << ' ' << (j + 1) << ':' << buf;
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

struct SplitResult {
  Dataset train;
  Dataset validation;  // empty when validation_fraction == 0
  Dataset test;
};

// Seeded permutation partition; standardization statistics come from the
// train rows only and are applied to every split.
inline SplitResult standardize_and_split(const Dataset& ds, const SplitSpec& split) {
  split.validate();
  const Index n = ds.n();
  std::vector<Index> perm(n);
  for (Index i = 0; i < n; ++i) perm[i] = i;
  RngStream stream = RngStream(split.seed).substream("data-split");
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(stream.uniform_index(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  const Index n_train = static_cast<Index>(std::floor(split.train_fraction * n));
  const Index n_val = static_cast<Index>(std::floor(split.validation_fraction * n));
  const Index n_test = n - n_train - n_val;
  if (n_train < 1 || n_test < 1 || (split.validation_fraction > 0.0 && n_val < 1))
    throw DataError("standardize_and_split: a requested split is empty");

  auto take = [&](Index offset, Index count) {
    Dataset out;
    out.name = ds.name;
    out.features = Matrix::Zero(count, ds.p());
    out.labels.resize(count);
    for (Index i = 0; i < count; ++i) {
      out.features.row(i) = ds.features.row(perm[offset + i]);
      out.labels[i] = ds.labels[perm[offset + i]];
    }
    return out;
  };
  SplitResult res;
  res.train = take(0, n_train);
  res.validation = take(n_train, n_val);
  res.test = take(n_train + n_val, n_test);

  Vector mean = res.train.features.colwise().mean().transpose();
  Vector std_dev(ds.p());
  for (Index j = 0; j < ds.p(); ++j) {
    const double var =
        (res.train.features.col(j).array() - mean(j)).square().sum() / static_cast<double>(n_train);
    std_dev(j) = std::sqrt(var);
  }
  auto apply = [&](Dataset& part) {
    for (Index j = 0; j < ds.p(); ++j) {
      const double denom = std_dev(j) > 1e-12 ? std_dev(j) : 1.0;  // constant columns unscaled
      part.features.col(j) = (part.features.col(j).array() - mean(j)) / denom;
    }
    part.column_mean = mean;
    part.column_std = std_dev;
    part.standardized = true;
  };
  apply(res.train);
  if (n_val > 0) apply(res.validation);
  apply(res.test);
  return res;
}

namespace detail {

constexpr char kHlrMagic[8] = {'S', 'V', 'M', 'R', 'H', 'L', 'R', '\0'};
constexpr std::uint32_t kHlrVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("hlr container: truncated file");
  return v;
}

template <typename T>
void write_span(std::ostream& out, const T* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_span(std::istream& in, T* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw IoError("hlr container: truncated file");
}

}  // namespace detail

// Versioned binary container; load(persist(m)) is bit-identical.
inline void persist_hlr(const HlrModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(detail::kHlrMagic, sizeof(detail::kHlrMagic));
  detail::write_pod(out, detail::kHlrVersion);
  detail::write_pod<std::int64_t>(out, m.n);
  detail::write_pod<std::int64_t>(out, m.p);
  detail::write_pod<std::int64_t>(out, m.num_groups);
  detail::write_pod<std::int64_t>(out, static_cast<std::int64_t>(m.features.val.size()));
  detail::write_pod<std::uint8_t>(out, m.group_law == "uniform" ? 1 : 0);
  detail::write_pod(out, m.sparsity);
  detail::write_pod(out, m.seed);
  detail::write_pod(out, m.sigma_beta);
  detail::write_pod(out, m.sigma_alpha);
  detail::write_pod(out, m.mu_tau);
  detail::write_pod(out, m.sigma_tau);
  detail::write_pod(out, m.true_alpha);
  detail::write_pod(out, m.true_log_tau);
  detail::write_span(out, m.true_beta.data(), static_cast<std::size_t>(m.p));
  detail::write_span(out, m.true_z.data(), static_cast<std::size_t>(m.num_groups));
  detail::write_span(out, m.features.row_ptr.data(), m.features.row_ptr.size());
  detail::write_span(out, m.features.col.data(), m.features.col.size());
  detail::write_span(out, m.features.val.data(), m.features.val.size());
  std::vector<std::uint8_t> lab(m.labels.begin(), m.labels.end());
  detail::write_span(out, lab.data(), lab.size());
  detail::write_span(out, m.groups.data(), m.groups.size());
  if (!out) throw IoError("write failed: " + path);
}

inline HlrModel load_hlr(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kHlrMagic, sizeof(magic)) != 0)
    throw IoError("hlr container: bad magic");
  const auto version = detail::read_pod<std::uint32_t>(in);
  if (version != detail::kHlrVersion)
    throw IoError("hlr container: unsupported version " + std::to_string(version));
  HlrModel m;
  m.n = detail::read_pod<std::int64_t>(in);
  m.p = detail::read_pod<std::int64_t>(in);
  m.num_groups = detail::read_pod<std::int64_t>(in);
  const auto nnz = detail::read_pod<std::int64_t>(in);
  m.group_law = detail::read_pod<std::uint8_t>(in) == 1 ? "uniform" : "long-tail";
  m.sparsity = detail::read_pod<double>(in);
  m.seed = detail::read_pod<std::uint64_t>(in);
  m.sigma_beta = detail::read_pod<double>(in);
  m.sigma_alpha = detail::read_pod<double>(in);
  m.mu_tau = detail::read_pod<double>(in);
  m.sigma_tau = detail::read_pod<double>(in);
  m.true_alpha = detail::read_pod<double>(in);
  m.true_log_tau = detail::read_pod<double>(in);
  m.true_beta.resize(m.p);
  detail::read_span(in, m.true_beta.data(), static_cast<std::size_t>(m.p));
  m.true_z.resize(m.num_groups);
  detail::read_span(in, m.true_z.data(), static_cast<std::size_t>(m.num_groups));
  m.features.rows = m.n;
  m.features.cols = m.p;
  m.features.row_ptr.resize(static_cast<std::size_t>(m.n) + 1);
  detail::read_span(in, m.features.row_ptr.data(), m.features.row_ptr.size());
  m.features.col.resize(static_cast<std::size_t>(nnz));
  m.features.val.resize(static_cast<std::size_t>(nnz));
  detail::read_span(in, m.features.col.data(), m.features.col.size());
  detail::read_span(in, m.features.val.data(), m.features.val.size());
  std::vector<std::uint8_t> lab(static_cast<std::size_t>(m.n));
  detail::read_span(in, lab.data(), lab.size());
  m.labels.assign(lab.begin(), lab.end());
  m.groups.resize(static_cast<std::size_t>(m.n));
  detail::read_span(in, m.groups.data(), m.groups.size());
  return m;
}

}  // namespace svmr
