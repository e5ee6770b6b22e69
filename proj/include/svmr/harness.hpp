#pragma once

#include "svmr/benchmarks.hpp"
#include "svmr/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace svmr {

using MetricSnapshot = std::map<std::string, double>;

struct CheckpointRecord {
  std::int64_t iteration = 0;
  MetricSnapshot metrics;
  CostCounters counters;
  bool is_finite = false;  // finite monitor value
};

enum class StopReason { budget, patience, nonfinite, diverged };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::budget: return "budget";
    case StopReason::patience: return "patience";
    case StopReason::nonfinite: return "nonfinite";
    case StopReason::diverged: return "diverged";
  }
  return "unknown";
}

struct RunResult {
  RunConfig config;
  std::vector<std::string> metric_keys;
  std::string monitor_key;
  std::vector<CheckpointRecord> records;
  int best_checkpoint = -1;  // -1 when no finite monitor value was seen
  StopReason stop_reason = StopReason::budget;

  bool has_finite_best() const { return best_checkpoint >= 0; }
};

// Patience / non-finite bookkeeping over the monitor sequence. Improvement
// means a strictly lower finite value; non-finite values never improve, and
// a finite value resets the non-finite streak. Only the monitor feeds this:
// companion metrics never influence stopping or best-checkpoint selection.
class EarlyStopper {
 public:
  EarlyStopper(int patience, int nonfinite_limit)
      : patience_(patience), nonfinite_limit_(nonfinite_limit) {}

  // Returns the stop reason if a guard fires at this checkpoint.
  std::optional<StopReason> observe(double monitor) {
    const int index = count_++;
    if (std::isfinite(monitor) && monitor < best_value_) {
      best_value_ = monitor;
      best_index_ = index;
      bad_streak_ = 0;
      nonfinite_streak_ = 0;
    } else {
      ++bad_streak_;
      if (std::isfinite(monitor)) nonfinite_streak_ = 0;
      else ++nonfinite_streak_;
    }
    if (patience_ > 0 && bad_streak_ >= patience_) return StopReason::patience;
    if (nonfinite_limit_ > 0 && nonfinite_streak_ >= nonfinite_limit_) return StopReason::nonfinite;
    return std::nullopt;
  }

  int best_index() const { return best_index_; }
  double best_value() const { return best_value_; }

 private:
  int patience_;
  int nonfinite_limit_;
  double best_value_ = std::numeric_limits<double>::infinity();
  int best_index_ = -1;
  int bad_streak_ = 0;
  int nonfinite_streak_ = 0;
  int count_ = 0;
};

namespace detail {

// Metric evaluation never panics: anything a metric cannot produce
// (non-finite state, too-short series, unresolvable bandwidth) becomes NaN
// and flows into the non-finite guard.
inline double guarded(const std::function<double()>& f) {
  try {
    const double v = f();
    return v;
  } catch (...) {
    return quiet_nan();
  }
}

inline MetricSnapshot evaluate_metrics(const Benchmark& bench, const Matrix& state) {
  KernelSpec metric_kernel;  // RBF, median heuristic, scale 1: independent of the sampler kernel
  MetricSnapshot snap;
  for (const auto& key : bench.metric_keys) {
    double value = quiet_nan();
    if (key == "ksd") {
      value = guarded([&] { return ksd(state, *bench.target, metric_kernel); });
    } else if (key == "mean_logp") {
      value = guarded([&] { return mean_logp(state, *bench.target); });
    } else if (key == "e_mu" || key == "e_sigma") {
      value = guarded([&] {
        auto [e_mu, e_sigma] = moment_errors(state, bench.target->reference_mean(),
                                             bench.target->reference_cov());
        return key == "e_mu" ? e_mu : e_sigma;
      });
    } else if (key == "ess") {
      value = guarded([&] {
        std::vector<double> series(static_cast<std::size_t>(state.rows()));
        for (Index i = 0; i < state.rows(); ++i) series[static_cast<std::size_t>(i)] = state(i, 0);
        return ess_1d(series);
      });
    } else if (key == "coverage" || key == "entropy" || key == "imbalance") {
      value = guarded([&] {
        const ModeMetrics mm = mode_metrics(state, *bench.mixture);
        return key == "coverage" ? mm.coverage : key == "entropy" ? mm.entropy : mm.imbalance;
      });
    } else if (key == "nll" || key == "acc" || key == "ece" || key == "nll_val") {
      const Split split = key == "nll_val" ? Split::validation : Split::test;
      value = guarded([&] {
        const auto probs = posterior_predictive(state, *bench.predictive, split);
        const auto pm = predictive_metrics(probs, bench.predictive->labels(split));
        return key == "acc" ? pm.acc : key == "ece" ? pm.ece : pm.nll;
      });
    } else {
      throw ConfigError("unknown metric key: " + key);
    }
    snap[key] = value;
  }
  return snap;
}

}  // namespace detail

// One full run: init, macro-step loop, checkpointed evaluation, patience and
// non-finite guards, best-finite-checkpoint selection.
inline RunResult run(const RunConfig& cfg) {
  if (cfg.max_iterations < 0) throw ConfigError("run: max_iterations must be >= 0");
  if (cfg.checkpoint_every < 1) throw ConfigError("run: checkpoint_every must be >= 1");
  if (cfg.particles < 1) throw ConfigError("run: particles must be >= 1");
  if (cfg.step.h <= 0.0) throw ConfigError("run: macro step h must be positive");
  cfg.step.validate();
  cfg.kernel.validate();

  const Benchmark bench = make_benchmark(cfg);
  const MethodKind method = parse_method(cfg.method);
  RngStream base(cfg.seed);

  RunResult result;
  result.config = cfg;
  result.metric_keys = bench.metric_keys;
  result.monitor_key = bench.monitor_key;

  Ensemble ens;
  ChainState chain;
  std::deque<Vector> window;
  RngStream noise = base.substream(method == MethodKind::sghmc ? "sghmc-noise" : "sgld-noise");
  const bool chain_method = is_chain_method(method);
  if (chain_method) {
    const Ensemble start = init_ensemble(1, bench.dim(), cfg.init, base);
    chain.position = start.particles.row(0).transpose();
    chain.momentum = Vector::Zero(bench.dim());
    chain.eta = cfg.chain.eta;
    chain.alpha = cfg.chain.alpha;
    chain.beta = cfg.chain.beta;
    chain.minibatch_fraction = cfg.chain.minibatch_fraction;
    window.push_back(chain.position);
  } else {
    ens = init_ensemble(cfg.particles, bench.dim(), cfg.init, base);
  }

  CostCounters ctr;
  const auto t0 = std::chrono::steady_clock::now();
  EarlyStopper stopper(cfg.patience, cfg.nonfinite_limit);
  bool stopped = false;

  auto state_matrix = [&]() -> Matrix {
    if (!chain_method) return ens.particles;
    Matrix m(static_cast<Index>(window.size()), bench.dim());
    Index r = 0;
    for (const auto& row : window) m.row(r++) = row.transpose();
    return m;
  };

  auto checkpoint = [&](std::int64_t iteration) {
    ctr.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CheckpointRecord rec;
    rec.iteration = iteration;
    rec.metrics = detail::evaluate_metrics(bench, state_matrix());
    rec.counters = ctr;
    const double monitor = rec.metrics.at(bench.monitor_key);
    rec.is_finite = std::isfinite(monitor);
    result.records.push_back(rec);

    if (const auto reason = stopper.observe(monitor)) {
      result.stop_reason = *reason;
      stopped = true;
    }
    result.best_checkpoint = stopper.best_index();
  };

  checkpoint(0);
  for (int iter = 1; iter <= cfg.max_iterations && !stopped; ++iter) {
    try {
      switch (method) {
        case MethodKind::svgd:
          ens = svgd_step(std::move(ens), *bench.target, cfg.kernel, cfg.step, ctr);
          break;
        case MethodKind::strang:
          ens = strang_step(std::move(ens), *bench.target, cfg.kernel, cfg.step, ctr);
          break;
        case MethodKind::mr:
          ens = mr_svgd_step(std::move(ens), *bench.target, cfg.kernel, cfg.step, ctr);
          break;
        case MethodKind::adapt_mr: {
          auto [next, report] = adapt_mr_svgd_step(std::move(ens), *bench.target, cfg.kernel,
                                                   cfg.step, ctr);
          ens = std::move(next);
          break;
        }
        case MethodKind::sgld:
          chain = sgld_step(std::move(chain), *bench.target, noise, ctr);
          break;
        case MethodKind::sghmc:
          chain = sghmc_step(std::move(chain), *bench.target, noise, ctr);
          break;
      }
    } catch (const DivergedError&) {
      result.stop_reason = StopReason::diverged;
      break;
    }
    if (chain_method) {
      window.push_back(chain.position);
      if (static_cast<int>(window.size()) > cfg.chain.window) window.pop_front();
      if (!chain.position.allFinite()) {
        result.stop_reason = StopReason::diverged;
        break;
      }
    }
    if (iter % cfg.checkpoint_every == 0) checkpoint(iter);
  }
  return result;
}

// Aggregated row of a sweep: per method, across seeds.
struct SweepRow {
  std::string benchmark;
  std::string method;
  int total_seeds = 0;
  int finite_seeds = 0;
  double best_iteration = quiet_nan();
  MetricSnapshot metrics;  // metrics at best checkpoint, aggregated
  double grad_evals = quiet_nan();
  double grad_batches = quiet_nan();
  double kernel_evals = quiet_nan();
  double wall_seconds = quiet_nan();
};

struct SweepResult {
  std::vector<std::string> metric_keys;
  std::string monitor_key;
  bool predictive = false;  // mean-over-finite aggregation instead of median
  std::vector<SweepRow> rows;
  std::vector<RunResult> runs;
};

namespace detail {

inline double median_of(std::vector<double> v) {
  if (v.empty()) return quiet_nan();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return quiet_nan();
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace detail

// Aggregates finished runs at their best finite checkpoints: median over
// seeds for sampling benchmarks, mean over finite seeds for predictive ones.
// Non-finite values are excluded either way; methods keep first-seen order.
inline SweepResult summarize_runs(std::vector<RunResult> runs) {
  if (runs.empty()) throw ConfigError("summarize_runs: no runs");
  SweepResult out;
  out.predictive = benchmark_is_predictive(runs.front().config.benchmark);
  out.metric_keys = runs.front().metric_keys;
  out.monitor_key = runs.front().monitor_key;
  out.runs = std::move(runs);

  std::vector<std::string> methods;
  for (const auto& r : out.runs)
    if (std::find(methods.begin(), methods.end(), r.config.method) == methods.end())
      methods.push_back(r.config.method);

  for (const auto& method : methods) {
    std::vector<const RunResult*> method_runs;
    for (const auto& r : out.runs)
      if (r.config.method == method) method_runs.push_back(&r);

    SweepRow row;
    row.benchmark = method_runs.front()->config.benchmark;
    row.method = method;
    row.total_seeds = static_cast<int>(method_runs.size());
    for (const RunResult* r : method_runs)
      if (r->has_finite_best()) ++row.finite_seeds;

    auto aggregate = [&](const std::function<double(const CheckpointRecord&)>& get) {
      std::vector<double> vals;
      for (const RunResult* r : method_runs) {
        if (!r->has_finite_best()) continue;
        const double v = get(r->records[static_cast<std::size_t>(r->best_checkpoint)]);
        if (std::isfinite(v)) vals.push_back(v);
      }
      return out.predictive ? detail::mean_of(vals) : detail::median_of(vals);
    };
    for (const auto& key : out.metric_keys)
      row.metrics[key] = aggregate([&](const CheckpointRecord& rec) { return rec.metrics.at(key); });
    row.best_iteration =
        aggregate([](const CheckpointRecord& rec) { return static_cast<double>(rec.iteration); });
    row.grad_evals =
        aggregate([](const CheckpointRecord& rec) { return static_cast<double>(rec.counters.grad_evals); });
    row.grad_batches =
        aggregate([](const CheckpointRecord& rec) { return static_cast<double>(rec.counters.grad_batches); });
    row.kernel_evals =
        aggregate([](const CheckpointRecord& rec) { return static_cast<double>(rec.counters.kernel_evals); });
    row.wall_seconds =
        aggregate([](const CheckpointRecord& rec) { return rec.counters.wall_seconds; });
    out.rows.push_back(std::move(row));
  }
  return out;
}

// Runs benchmark x methods x seeds, then aggregates.
inline SweepResult sweep(const RunConfig& base, const std::vector<std::string>& methods,
                         const std::vector<std::uint64_t>& seeds) {
  if (methods.empty() || seeds.empty()) throw ConfigError("sweep: methods and seeds must be nonempty");
  std::vector<RunResult> runs;
  for (const auto& method : methods) {
    for (std::uint64_t seed : seeds) {
      RunConfig cfg = base;
      cfg.method = method;
      cfg.seed = seed;
      runs.push_back(run(cfg));
    }
  }
  return summarize_runs(std::move(runs));
}

}  // namespace svmr
