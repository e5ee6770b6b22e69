#pragma once

#include "svmr/harness.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace svmr {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Temp-file + rename so parallel sweeps never expose partial files.
inline void atomic_write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp);
    out << content;
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("rename failed for " + path + ": " + ec.message());
}

// Fixed column order: benchmark,method,seed,iteration,<metrics>,grad_evals,
// grad_batches,kernel_evals,wall_seconds,is_finite.
inline std::string checkpoint_csv(const std::vector<RunResult>& runs) {
  if (runs.empty()) return "benchmark,method,seed,iteration\n";
  std::ostringstream out;
  out << "benchmark,method,seed,iteration";
  for (const auto& key : runs.front().metric_keys) out << ',' << key;
  out << ",grad_evals,grad_batches,kernel_evals,wall_seconds,is_finite\n";
  for (const auto& r : runs) {
    for (const auto& rec : r.records) {
      out << r.config.benchmark << ',' << r.config.method << ',' << r.config.seed << ','
          << rec.iteration;
      for (const auto& key : r.metric_keys) out << ',' << format_double(rec.metrics.at(key));
      out << ',' << rec.counters.grad_evals << ',' << rec.counters.grad_batches << ','
          << rec.counters.kernel_evals << ',' << format_double(rec.counters.wall_seconds) << ','
          << (rec.is_finite ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

inline std::string summary_csv(const SweepResult& sweep) {
  std::ostringstream out;
  out << "benchmark,method,total_seeds,finite_seeds,best_iteration";
  for (const auto& key : sweep.metric_keys) out << ',' << key;
  out << ",grad_evals,grad_batches,kernel_evals,wall_seconds\n";
  for (const auto& row : sweep.rows) {
    out << row.benchmark << ',' << row.method << ',' << row.total_seeds << ',' << row.finite_seeds
        << ',' << format_double(row.best_iteration);
    for (const auto& key : sweep.metric_keys) out << ',' << format_double(row.metrics.at(key));
    out << ',' << format_double(row.grad_evals) << ',' << format_double(row.grad_batches) << ','
        << format_double(row.kernel_evals) << ',' << format_double(row.wall_seconds) << '\n';
  }
  return out.str();
}

inline nlohmann::json summary_json(const SweepResult& sweep) {
  nlohmann::json j;
  j["monitor"] = sweep.monitor_key;
  j["aggregation"] = sweep.predictive ? "mean-finite" : "median-finite";
  j["metric_keys"] = sweep.metric_keys;
  j["rows"] = nlohmann::json::array();
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;  // JSON has no NaN
  };
  for (const auto& row : sweep.rows) {
    nlohmann::json r;
    r["benchmark"] = row.benchmark;
    r["method"] = row.method;
    r["total_seeds"] = row.total_seeds;
    r["finite_seeds"] = row.finite_seeds;
    r["best_iteration"] = num(row.best_iteration);
    r["metrics"] = nlohmann::json::object();
    for (const auto& [k, v] : row.metrics) r["metrics"][k] = num(v);
    r["grad_evals"] = num(row.grad_evals);
    r["grad_batches"] = num(row.grad_batches);
    r["kernel_evals"] = num(row.kernel_evals);
    r["wall_seconds"] = num(row.wall_seconds);
    j["rows"].push_back(std::move(r));
  }
  return j;
}

namespace detail {

struct SvgAxis {
  double lo = 0.0, hi = 1.0;
  double to_px(double v, double px_lo, double px_hi) const {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    return px_lo + t * (px_hi - px_lo);
  }
};

inline const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace detail

// Monitor trace per (method, seed); non-finite checkpoints leave gaps.
inline std::string monitor_svg(const SweepResult& sweep) {
  const double width = 720, height = 420, ml = 70, mr = 20, mt = 30, mb = 50;
  detail::SvgAxis xa, ya;
  bool any = false;
  for (const auto& r : sweep.runs) {
    for (const auto& rec : r.records) {
      const double v = rec.metrics.at(sweep.monitor_key);
      if (!std::isfinite(v)) continue;
      if (!any) {
        xa.lo = xa.hi = static_cast<double>(rec.iteration);
        ya.lo = ya.hi = v;
        any = true;
      }
      xa.lo = std::min(xa.lo, static_cast<double>(rec.iteration));
      xa.hi = std::max(xa.hi, static_cast<double>(rec.iteration));
      ya.lo = std::min(ya.lo, v);
      ya.hi = std::max(ya.hi, v);
    }
  }
  if (!any) { xa = {0, 1}; ya = {0, 1}; }
  if (ya.hi == ya.lo) ya.hi = ya.lo + 1.0;

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<line x1='" << ml << "' y1='" << height - mb << "' x2='" << width - mr << "' y2='"
      << height - mb << "' stroke='black'/>\n";
  svg << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << height - mb
      << "' stroke='black'/>\n";
  svg << "<text x='" << width / 2 << "' y='" << height - 12 << "' text-anchor='middle'>iteration</text>\n";
  svg << "<text x='16' y='" << height / 2 << "' transform='rotate(-90 16," << height / 2
      << ")' text-anchor='middle'>" << sweep.monitor_key << "</text>\n";

  std::vector<std::string> methods;
  int color_idx = 0;
  for (const auto& r : sweep.runs) {
    auto it = std::find(methods.begin(), methods.end(), r.config.method);
    int ci;
    if (it == methods.end()) {
      methods.push_back(r.config.method);
      ci = color_idx++ % 8;
    } else {
      ci = static_cast<int>(it - methods.begin()) % 8;
    }
    std::ostringstream pts;
    bool open = false;
    for (const auto& rec : r.records) {
      const double v = rec.metrics.at(sweep.monitor_key);
      if (!std::isfinite(v)) {
        if (open) { svg << "<polyline fill='none' stroke='" << detail::kPalette[ci]
                        << "' stroke-width='1.5' points='" << pts.str() << "'/>\n"; }
        pts.str("");
        open = false;
        continue;
      }
      pts << xa.to_px(static_cast<double>(rec.iteration), ml, width - mr) << ','
          << ya.to_px(v, height - mb, mt) << ' ';
      open = true;
    }
    if (open)
      svg << "<polyline fill='none' stroke='" << detail::kPalette[ci]
          << "' stroke-width='1.5' points='" << pts.str() << "'/>\n";
  }
  double ly = mt + 4;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    svg << "<rect x='" << width - mr - 150 << "' y='" << ly << "' width='12' height='12' fill='"
        << detail::kPalette[i % 8] << "'/><text x='" << width - mr - 132 << "' y='" << ly + 11
        << "'>" << methods[i] << "</text>\n";
    ly += 18;
  }
  svg << "</svg>\n";
  return svg.str();
}

// Quality-cost scatter: monitor at best checkpoint vs wall time at best.
inline std::string pareto_svg(const SweepResult& sweep) {
  const double width = 560, height = 420, ml = 80, mr = 20, mt = 30, mb = 50;
  detail::SvgAxis xa, ya;
  bool any = false;
  for (const auto& row : sweep.rows) {
    const double x = row.wall_seconds, y = row.metrics.at(sweep.monitor_key);
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    if (!any) { xa.lo = xa.hi = x; ya.lo = ya.hi = y; any = true; }
    xa.lo = std::min(xa.lo, x); xa.hi = std::max(xa.hi, x);
    ya.lo = std::min(ya.lo, y); ya.hi = std::max(ya.hi, y);
  }
  if (!any) { xa = {0, 1}; ya = {0, 1}; }
  if (xa.hi == xa.lo) xa.hi = xa.lo + 1.0;
  if (ya.hi == ya.lo) ya.hi = ya.lo + 1.0;

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<line x1='" << ml << "' y1='" << height - mb << "' x2='" << width - mr << "' y2='"
      << height - mb << "' stroke='black'/>\n";
  svg << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << height - mb
      << "' stroke='black'/>\n";
  svg << "<text x='" << width / 2 << "' y='" << height - 12
      << "' text-anchor='middle'>wall seconds at best checkpoint</text>\n";
  svg << "<text x='16' y='" << height / 2 << "' transform='rotate(-90 16," << height / 2
      << ")' text-anchor='middle'>" << sweep.monitor_key << " at best</text>\n";
  int ci = 0;
  for (const auto& row : sweep.rows) {
    const double x = row.wall_seconds, y = row.metrics.at(sweep.monitor_key);
    const int c = ci++ % 8;
    if (std::isfinite(x) && std::isfinite(y)) {
      const double px = xa.to_px(x, ml, width - mr), py = ya.to_px(y, height - mb, mt);
      svg << "<circle cx='" << px << "' cy='" << py << "' r='6' fill='" << detail::kPalette[c]
          << "'/><text x='" << px + 9 << "' y='" << py + 4 << "'>" << row.method << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void emit_outputs(const SweepResult& sweep, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  atomic_write_text(out_dir + "/checkpoints.csv", checkpoint_csv(sweep.runs));
  atomic_write_text(out_dir + "/summary.csv", summary_csv(sweep));
  atomic_write_text(out_dir + "/summary.json", summary_json(sweep).dump(2) + "\n");
  atomic_write_text(out_dir + "/monitor.svg", monitor_svg(sweep));
  atomic_write_text(out_dir + "/pareto.svg", pareto_svg(sweep));
}

namespace detail {

inline std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(cur);
  return out;
}

}  // namespace detail

// Rebuilds runs from one or more per-checkpoint CSVs (fixed column order as
// written by checkpoint_csv) and recomputes best checkpoints under the
// benchmark's default monitor.
inline SweepResult summarize_csv_files(const std::vector<std::string>& paths) {
  if (paths.empty()) throw ConfigError("summarize: no input files");
  std::vector<RunResult> runs;
  std::vector<std::string> metric_keys;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    auto header = detail::csv_fields(line);
    if (header.size() < 9 || header[0] != "benchmark" || header[3] != "iteration" ||
        header.back() != "is_finite")
      throw DataError(path + ": not a checkpoints csv");
    std::vector<std::string> keys(header.begin() + 4, header.end() - 5);
    if (metric_keys.empty()) metric_keys = keys;
    else if (metric_keys != keys) throw DataError(path + ": metric columns differ between files");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto f = detail::csv_fields(line);
      if (f.size() != header.size())
        throw DataError(path + ": line " + std::to_string(line_no) + ": wrong field count");
      const std::string& benchmark = f[0];
      const std::string& method = f[1];
      const std::uint64_t seed = std::stoull(f[2]);
      RunResult* target_run = nullptr;
      for (auto& r : runs)
        if (r.config.benchmark == benchmark && r.config.method == method && r.config.seed == seed)
          target_run = &r;
      if (!target_run) {
        RunResult r;
        r.config = default_config(benchmark, method);
        r.config.seed = seed;
        r.metric_keys = keys;
        r.monitor_key = benchmark_is_predictive(benchmark)
                            ? (benchmark.rfind("bnn-", 0) == 0 ? "nll_val" : "nll")
                            : "ksd";
        runs.push_back(std::move(r));
        target_run = &runs.back();
      }
      CheckpointRecord rec;
      rec.iteration = std::stoll(f[3]);
      for (std::size_t k = 0; k < keys.size(); ++k) rec.metrics[keys[k]] = std::stod(f[4 + k]);
      const std::size_t base = 4 + keys.size();
      rec.counters.grad_evals = std::stoll(f[base]);
      rec.counters.grad_batches = std::stoll(f[base + 1]);
      rec.counters.kernel_evals = std::stoll(f[base + 2]);
      rec.counters.wall_seconds = std::stod(f[base + 3]);
      rec.is_finite = f[base + 4] == "1";
      target_run->records.push_back(std::move(rec));
    }
  }
  for (auto& r : runs) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      const double v = r.records[i].metrics.at(r.monitor_key);
      if (std::isfinite(v) && v < best) {
        best = v;
        r.best_checkpoint = static_cast<int>(i);
      }
    }
  }
  return summarize_runs(std::move(runs));
}

}  // namespace svmr
