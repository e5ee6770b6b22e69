#pragma once

#include "svmr/benchmarks.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <string>

namespace svmr {

inline std::string kernel_kind_name(KernelKind k) {
  return k == KernelKind::rbf ? "rbf" : "multiscale-rbf";
}
inline std::string bandwidth_policy_name(BandwidthPolicy p) {
  return p == BandwidthPolicy::median_heuristic ? "median-heuristic" : "fixed";
}
inline std::string init_kind_name(InitKind k) {
  return k == InitKind::gaussian ? "gaussian" : "point";
}

// Full resolved configuration, echoed into out_dir for provenance.
inline nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["benchmark"] = cfg.benchmark;
  j["method"] = cfg.method;
  j["seed"] = cfg.seed;
  j["max_iterations"] = cfg.max_iterations;
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["particles"] = cfg.particles;
  j["monitor"] = cfg.monitor;
  j["monitor_overridden"] = cfg.monitor_overridden;
  j["patience"] = cfg.patience;
  j["nonfinite_limit"] = cfg.nonfinite_limit;
  j["uniform_score_clipping"] = true;  // clipping applies to all SVGD-family methods
  j["step"] = {{"h", cfg.step.h},
               {"m_fixed", cfg.step.m_fixed},
               {"m_min", cfg.step.m_min},
               {"m_max", cfg.step.m_max},
               {"tol", cfg.step.tol},
               {"eps", cfg.step.eps},
               {"clip_bound", cfg.step.clip_bound},
               {"strang_half_substeps", cfg.step.strang_half_substeps}};
  j["kernel"] = {{"kind", kernel_kind_name(cfg.kernel.kind)},
                 {"bandwidth_policy", bandwidth_policy_name(cfg.kernel.policy)},
                 {"scale_factor", cfg.kernel.scale_factor},
                 {"multiscale_factors", cfg.kernel.multiscale_factors},
                 {"fixed_ell2", cfg.kernel.fixed_ell2},
                 {"ell2_floor", cfg.kernel.ell2_floor}};
  j["chain"] = {{"eta", cfg.chain.eta},
                {"alpha", cfg.chain.alpha},
                {"beta", cfg.chain.beta},
                {"minibatch_fraction", cfg.chain.minibatch_fraction},
                {"window", cfg.chain.window}};
  j["init"] = {{"kind", init_kind_name(cfg.init.kind)}, {"sigma0", cfg.init.sigma0}};
  j["dataset"] = {{"path", cfg.dataset_path},
                  {"format", cfg.dataset_format},
                  {"has_header", cfg.csv.has_header},
                  {"label_column", cfg.csv.label_column}};
  j["prior_var"] = cfg.prior_var;
  j["bnn_width"] = cfg.bnn_width;
  j["hlr"] = {{"n", cfg.hlr_n},
              {"p", cfg.hlr_p},
              {"g", cfg.hlr_g},
              {"sparsity", cfg.hlr_sparsity},
              {"load_path", cfg.hlr_load_path}};
  j["mix8_component_std"] = cfg.mix8_component_std;
  j["out_dir"] = cfg.out_dir;
  return j;
}

namespace detail {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

// Overrides fields of cfg with any present in j. Unknown keys are rejected
// so typos fail loudly.
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "benchmark",   "method",       "seed",          "max_iterations", "checkpoint_every",
      "particles",   "monitor",      "patience",      "nonfinite_limit", "step",
      "kernel",      "chain",        "init",          "dataset",        "prior_var",
      "bnn_width",   "hlr",          "mix8_component_std",              "out_dir"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key: " + key);

  detail::maybe(j, "benchmark", cfg.benchmark);
  detail::maybe(j, "method", cfg.method);
  detail::maybe(j, "seed", cfg.seed);
  detail::maybe(j, "max_iterations", cfg.max_iterations);
  detail::maybe(j, "checkpoint_every", cfg.checkpoint_every);
  detail::maybe(j, "particles", cfg.particles);
  if (j.contains("monitor")) {
    const std::string requested = j.at("monitor").get<std::string>();
    if (requested != cfg.monitor) cfg.monitor_overridden = true;
    cfg.monitor = requested;
  }
  detail::maybe(j, "patience", cfg.patience);
  detail::maybe(j, "nonfinite_limit", cfg.nonfinite_limit);
  if (j.contains("step")) {
    const auto& s = j.at("step");
    detail::maybe(s, "h", cfg.step.h);
    detail::maybe(s, "m_fixed", cfg.step.m_fixed);
    detail::maybe(s, "m_min", cfg.step.m_min);
    detail::maybe(s, "m_max", cfg.step.m_max);
    detail::maybe(s, "tol", cfg.step.tol);
    detail::maybe(s, "eps", cfg.step.eps);
    detail::maybe(s, "clip_bound", cfg.step.clip_bound);
    detail::maybe(s, "strang_half_substeps", cfg.step.strang_half_substeps);
  }
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    if (k.contains("kind")) cfg.kernel.kind = parse_kernel_kind(k.at("kind").get<std::string>());
    if (k.contains("bandwidth_policy"))
      cfg.kernel.policy = parse_bandwidth_policy(k.at("bandwidth_policy").get<std::string>());
    detail::maybe(k, "scale_factor", cfg.kernel.scale_factor);
    detail::maybe(k, "multiscale_factors", cfg.kernel.multiscale_factors);
    detail::maybe(k, "fixed_ell2", cfg.kernel.fixed_ell2);
    detail::maybe(k, "ell2_floor", cfg.kernel.ell2_floor);
  }
  if (j.contains("chain")) {
    const auto& c = j.at("chain");
    detail::maybe(c, "eta", cfg.chain.eta);
    detail::maybe(c, "alpha", cfg.chain.alpha);
    detail::maybe(c, "beta", cfg.chain.beta);
    detail::maybe(c, "minibatch_fraction", cfg.chain.minibatch_fraction);
    detail::maybe(c, "window", cfg.chain.window);
  }
  if (j.contains("init")) {
    const auto& i = j.at("init");
    std::string kind = init_kind_name(cfg.init.kind);
    detail::maybe(i, "kind", kind);
    double sigma0 = cfg.init.sigma0;
    detail::maybe(i, "sigma0", sigma0);
    cfg.init = InitSpec::parse(kind, sigma0);
  }
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    detail::maybe(d, "path", cfg.dataset_path);
    detail::maybe(d, "format", cfg.dataset_format);
    detail::maybe(d, "has_header", cfg.csv.has_header);
    detail::maybe(d, "label_column", cfg.csv.label_column);
  }
  detail::maybe(j, "prior_var", cfg.prior_var);
  detail::maybe(j, "bnn_width", cfg.bnn_width);
  if (j.contains("hlr")) {
    const auto& h = j.at("hlr");
    detail::maybe(h, "n", cfg.hlr_n);
    detail::maybe(h, "p", cfg.hlr_p);
    detail::maybe(h, "g", cfg.hlr_g);
    detail::maybe(h, "sparsity", cfg.hlr_sparsity);
    detail::maybe(h, "load_path", cfg.hlr_load_path);
  }
  detail::maybe(j, "mix8_component_std", cfg.mix8_component_std);
  detail::maybe(j, "out_dir", cfg.out_dir);
}

// Builds a config from a JSON file: benchmark/method pick the defaults, the
// remaining keys override them.
inline RunConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.contains("benchmark")) throw ConfigError(path + ": config needs a benchmark");
  RunConfig cfg = default_config(j.at("benchmark").get<std::string>(),
                                 j.value("method", std::string("svgd")));
  apply_config_json(cfg, j);
  return cfg;
}

}  // namespace svmr
