#pragma once

#include "svmr/data_io.hpp"
#include "svmr/ensemble.hpp"
#include "svmr/kernel.hpp"
#include "svmr/samplers.hpp"
#include "svmr/targets/bnn.hpp"
#include "svmr/targets/gaussian.hpp"
#include "svmr/targets/hlr.hpp"
#include "svmr/targets/logreg.hpp"
#include "svmr/targets/mixture.hpp"
#include "svmr/targets/synthetic2d.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace svmr {

enum class MethodKind { svgd, strang, mr, adapt_mr, sgld, sghmc };

inline MethodKind parse_method(const std::string& s) {
  if (s == "svgd") return MethodKind::svgd;
  if (s == "strang") return MethodKind::strang;
  if (s == "mr") return MethodKind::mr;
  if (s == "adapt-mr") return MethodKind::adapt_mr;
  if (s == "sgld") return MethodKind::sgld;
  if (s == "sghmc") return MethodKind::sghmc;
  throw ConfigError("unknown method: " + s);
}

inline bool is_chain_method(MethodKind m) {
  return m == MethodKind::sgld || m == MethodKind::sghmc;
}

struct ChainParams {
  double eta = 1e-3;
  double alpha = 0.1;
  double beta = 0.9;
  double minibatch_fraction = 1.0;
  int window = 512;  // rolling window of recent iterates for chain metrics
};

struct RunConfig {
  std::string benchmark;
  std::string method = "svgd";
  std::uint64_t seed = 0;
  int max_iterations = 1000;
  int checkpoint_every = 20;
  int particles = 128;
  std::string monitor = "ksd";  // "ksd" or "nll"; defaults enforced per benchmark
  bool monitor_overridden = false;
  int patience = 5;        // 0 disables (fixed budget)
  int nonfinite_limit = 0; // 0 disables

  StepConfig step;
  KernelSpec kernel;
  ChainParams chain;
  InitSpec init;

  // dataset-backed benchmarks
  std::string dataset_path;
  std::string dataset_format = "csv";
  CsvOptions csv;
  double prior_var = 1.0;
  int bnn_width = 32;

  // hlr
  Index hlr_n = 10000;
  Index hlr_p = 30;
  Index hlr_g = 500;
  double hlr_sparsity = 0.05;
  std::string hlr_load_path;

  double mix8_component_std = 0.5;

  std::string out_dir = "out";
};

inline bool benchmark_is_predictive(const std::string& id) {
  return id.rfind("uci-", 0) == 0 || id.rfind("bnn-", 0) == 0 || id.rfind("hlr-", 0) == 0;
}

// Per-benchmark protocol defaults; explicit config and CLI flags override.
inline RunConfig default_config(const std::string& benchmark, const std::string& method) {
  RunConfig cfg;
  cfg.benchmark = benchmark;
  cfg.method = method;
  cfg.monitor = benchmark_is_predictive(benchmark) ? "nll" : "ksd";
  if (benchmark == "gauss50") {
    cfg.checkpoint_every = 50;
    cfg.step.h = 0.05;
  } else if (benchmark.rfind("2d-", 0) == 0) {
    cfg.step.h = 0.05;
  } else if (benchmark == "gauss2d") {
    cfg.step.h = 0.2;
  } else if (benchmark == "mix8") {
    cfg.patience = 0;  // fixed-budget final-checkpoint protocol
    cfg.kernel.kind = KernelKind::multiscale_rbf;
    cfg.step.h = 0.05;
    cfg.init.sigma0 = 0.5;
    cfg.chain.eta = 1e-2;
  } else if (benchmark.rfind("uci-", 0) == 0) {
    cfg.step.h = 0.1;
    cfg.chain.eta = 1e-3;
  } else if (benchmark.rfind("bnn-", 0) == 0) {
    cfg.step.h = 1e-2;
    cfg.prior_var = 1.0;
    cfg.chain.eta = 1e-3;
  } else if (benchmark.rfind("hlr-", 0) == 0) {
    cfg.particles = 32;
    cfg.nonfinite_limit = 2;
    cfg.step.h = 0.05;
    cfg.chain.eta = 1e-3;
  }
  return cfg;
}

// A constructed benchmark: target, metric schedule, and monitor key.
struct Benchmark {
  std::string id;
  std::shared_ptr<TargetModel> target;
  std::shared_ptr<PredictiveTarget> predictive;  // non-null for predictive tasks
  std::optional<MixtureSpec> mixture;
  std::vector<std::string> metric_keys;
  std::string monitor_key;

  Index dim() const { return target->dim(); }
};

inline Benchmark make_benchmark(const RunConfig& cfg) {
  Benchmark b;
  b.id = cfg.benchmark;
  const std::string& id = cfg.benchmark;

  if (id == "gauss50") {
    b.target = make_gauss50();
    b.metric_keys = {"ksd", "e_mu", "e_sigma", "mean_logp", "ess"};
  } else if (id == "gauss2d") {
    b.target = make_std_gauss(2);
    b.metric_keys = {"ksd", "e_mu", "e_sigma", "mean_logp", "ess"};
  } else if (id.rfind("2d-", 0) == 0) {
    b.target = make_2d_target(id.substr(3));
    b.metric_keys = {"ksd", "mean_logp", "ess"};
  } else if (id == "mix8") {
    auto [target, spec] = make_mix8(cfg.mix8_component_std);
    b.target = target;
    b.mixture = spec;
    b.metric_keys = {"coverage", "entropy", "imbalance", "ksd", "mean_logp", "ess"};
  } else if (id.rfind("uci-", 0) == 0) {
    if (cfg.dataset_path.empty()) throw ConfigError(id + ": dataset path required");
    Dataset ds = load_dataset(cfg.dataset_path, cfg.dataset_format, cfg.csv);
    SplitSpec split{0.8, 0.0, 0.2, cfg.seed};
    b.predictive = make_logreg(standardize_and_split(ds, split), cfg.prior_var);
    b.target = b.predictive;
    b.metric_keys = {"nll", "acc", "ece", "ess"};
  } else if (id.rfind("bnn-", 0) == 0) {
    if (cfg.dataset_path.empty()) throw ConfigError(id + ": dataset path required");
    Dataset ds = load_dataset(cfg.dataset_path, cfg.dataset_format, cfg.csv);
    SplitSpec split{0.6, 0.2, 0.2, cfg.seed};
    b.predictive = make_bnn(standardize_and_split(ds, split), cfg.bnn_width, cfg.prior_var);
    b.target = b.predictive;
    b.metric_keys = {"nll_val", "nll", "acc", "ece", "ess", "mean_logp"};
  } else if (id == "hlr-longtail" || id == "hlr-uniform") {
    HlrModel model;
    if (!cfg.hlr_load_path.empty()) {
      model = load_hlr(cfg.hlr_load_path);
    } else {
      const std::string law = id == "hlr-uniform" ? "uniform" : "long-tail";
      model = hlr_generate(cfg.hlr_n, cfg.hlr_p, cfg.hlr_g, law, cfg.hlr_sparsity, cfg.seed);
    }
    b.predictive = make_hlr_target(std::move(model));
    b.target = b.predictive;
    b.metric_keys = {"nll", "acc", "ece", "ess"};
  } else {
    throw ConfigError("unknown benchmark: " + id);
  }

  if (cfg.monitor == "nll") {
    b.monitor_key = id.rfind("bnn-", 0) == 0 ? "nll_val" : "nll";
    if (!b.predictive) throw ConfigError(id + ": nll monitor needs a predictive benchmark");
  } else if (cfg.monitor == "ksd") {
    b.monitor_key = "ksd";
  } else {
    throw ConfigError("unknown monitor: " + cfg.monitor);
  }
  for (const auto& k : b.metric_keys)
    if (k == b.monitor_key) return b;
  throw ConfigError(id + ": monitor " + b.monitor_key + " not in the benchmark metric set");
}

}  // namespace svmr
