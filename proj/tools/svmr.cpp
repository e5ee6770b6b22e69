#include "svmr/config_json.hpp"
#include "svmr/output.hpp"
#include "svmr/validate.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace svmr;

struct CliOverrides {
  std::string config_path;
  std::string benchmark;
  std::string method;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_iterations;
  std::optional<int> checkpoint_every;
  std::optional<int> particles;
  std::optional<std::string> monitor;
  std::optional<int> patience;
  std::optional<int> nonfinite_limit;
  std::optional<double> h;
  std::optional<int> m_fixed;
  std::optional<int> m_min, m_max;
  std::optional<double> tol;
  std::optional<double> clip_bound;
  std::optional<std::string> kernel_kind;
  std::optional<std::string> bandwidth_policy;
  std::optional<double> scale_factor;
  std::optional<double> fixed_ell2;
  std::optional<double> eta, alpha, beta, minibatch_fraction;
  std::optional<std::string> dataset_path, dataset_format;
  std::optional<bool> csv_header;
  std::optional<int> label_column;
  std::optional<double> prior_var;
  std::optional<int> bnn_width;
  std::optional<long long> hlr_n, hlr_p, hlr_g;
  std::optional<double> hlr_sparsity;
  std::optional<std::string> hlr_load;
  std::optional<double> sigma0;
  std::optional<std::string> init_kind;
  std::string out_dir;
};

void add_override_flags(CLI::App* cmd, CliOverrides& o, bool need_benchmark) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  auto* bench = cmd->add_option("--benchmark", o.benchmark, "benchmark id");
  if (need_benchmark) bench->required(false);
  cmd->add_option("--method", o.method, "svgd|strang|mr|adapt-mr|sgld|sghmc");
  cmd->add_option("--seed", o.seed, "base RNG seed");
  cmd->add_option("--max-iterations", o.max_iterations);
  cmd->add_option("--checkpoint-every", o.checkpoint_every);
  cmd->add_option("--particles", o.particles);
  cmd->add_option("--monitor", o.monitor, "ksd|nll (default per benchmark)");
  cmd->add_option("--patience", o.patience, "checkpoints without improvement; 0 disables");
  cmd->add_option("--nonfinite-limit", o.nonfinite_limit, "consecutive non-finite checkpoints; 0 disables");
  cmd->add_option("--step-h", o.h, "macro step size");
  cmd->add_option("--m-fixed", o.m_fixed);
  cmd->add_option("--m-min", o.m_min);
  cmd->add_option("--m-max", o.m_max);
  cmd->add_option("--tol", o.tol, "adaptive controller tolerance");
  cmd->add_option("--clip-bound", o.clip_bound);
  cmd->add_option("--kernel", o.kernel_kind, "rbf|multiscale-rbf");
  cmd->add_option("--bandwidth-policy", o.bandwidth_policy, "median-heuristic|fixed");
  cmd->add_option("--kernel-scale", o.scale_factor);
  cmd->add_option("--fixed-ell2", o.fixed_ell2);
  cmd->add_option("--eta", o.eta, "chain step size");
  cmd->add_option("--alpha", o.alpha, "sghmc friction");
  cmd->add_option("--beta", o.beta, "sghmc momentum decay");
  cmd->add_option("--minibatch-fraction", o.minibatch_fraction);
  cmd->add_option("--dataset", o.dataset_path, "dataset file path");
  cmd->add_option("--format", o.dataset_format, "csv|libsvm");
  cmd->add_option("--csv-header", o.csv_header);
  cmd->add_option("--label-column", o.label_column);
  cmd->add_option("--prior-var", o.prior_var);
  cmd->add_option("--bnn-width", o.bnn_width);
  cmd->add_option("--hlr-n", o.hlr_n);
  cmd->add_option("--hlr-p", o.hlr_p);
  cmd->add_option("--hlr-g", o.hlr_g);
  cmd->add_option("--hlr-sparsity", o.hlr_sparsity);
  cmd->add_option("--hlr-load", o.hlr_load, "load a persisted hlr instance");
  cmd->add_option("--sigma0", o.sigma0, "initializer scale");
  cmd->add_option("--init", o.init_kind, "gaussian|point");
  cmd->add_option("--out", o.out_dir, "output directory");
}

// Precedence: flags > environment > config file > per-benchmark defaults.
RunConfig resolve_config(const CliOverrides& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) {
    cfg = config_from_file(o.config_path);
    if (!o.benchmark.empty() && o.benchmark != cfg.benchmark)
      cfg = default_config(o.benchmark, o.method.empty() ? cfg.method : o.method);
  } else {
    if (o.benchmark.empty()) throw ConfigError("a benchmark is required (flag or config file)");
    cfg = default_config(o.benchmark, o.method.empty() ? "svgd" : o.method);
  }
  if (const char* env_seed = std::getenv("SVMR_SEED")) cfg.seed = std::stoull(env_seed);
  if (const char* env_out = std::getenv("SVMR_OUT")) cfg.out_dir = env_out;

  if (!o.method.empty()) cfg.method = o.method;
  if (o.seed) cfg.seed = *o.seed;
  if (o.max_iterations) cfg.max_iterations = *o.max_iterations;
  if (o.checkpoint_every) cfg.checkpoint_every = *o.checkpoint_every;
  if (o.particles) cfg.particles = *o.particles;
  if (o.monitor) {
    if (*o.monitor != cfg.monitor) cfg.monitor_overridden = true;
    cfg.monitor = *o.monitor;
  }
  if (o.patience) cfg.patience = *o.patience;
  if (o.nonfinite_limit) cfg.nonfinite_limit = *o.nonfinite_limit;
  if (o.h) cfg.step.h = *o.h;
  if (o.m_fixed) cfg.step.m_fixed = *o.m_fixed;
  if (o.m_min) cfg.step.m_min = *o.m_min;
  if (o.m_max) cfg.step.m_max = *o.m_max;
  if (o.tol) cfg.step.tol = *o.tol;
  if (o.clip_bound) cfg.step.clip_bound = *o.clip_bound;
  if (o.kernel_kind) cfg.kernel.kind = parse_kernel_kind(*o.kernel_kind);
  if (o.bandwidth_policy) cfg.kernel.policy = parse_bandwidth_policy(*o.bandwidth_policy);
  if (o.scale_factor) cfg.kernel.scale_factor = *o.scale_factor;
  if (o.fixed_ell2) cfg.kernel.fixed_ell2 = *o.fixed_ell2;
  if (o.eta) cfg.chain.eta = *o.eta;
  if (o.alpha) cfg.chain.alpha = *o.alpha;
  if (o.beta) cfg.chain.beta = *o.beta;
  if (o.minibatch_fraction) cfg.chain.minibatch_fraction = *o.minibatch_fraction;
  if (o.dataset_path) cfg.dataset_path = *o.dataset_path;
  if (o.dataset_format) cfg.dataset_format = *o.dataset_format;
  if (o.csv_header) cfg.csv.has_header = *o.csv_header;
  if (o.label_column) cfg.csv.label_column = *o.label_column;
  if (o.prior_var) cfg.prior_var = *o.prior_var;
  if (o.bnn_width) cfg.bnn_width = *o.bnn_width;
  if (o.hlr_n) cfg.hlr_n = *o.hlr_n;
  if (o.hlr_p) cfg.hlr_p = *o.hlr_p;
  if (o.hlr_g) cfg.hlr_g = *o.hlr_g;
  if (o.hlr_sparsity) cfg.hlr_sparsity = *o.hlr_sparsity;
  if (o.hlr_load) cfg.hlr_load_path = *o.hlr_load;
  if (o.sigma0) cfg.init.sigma0 = *o.sigma0;
  if (o.init_kind) cfg.init = InitSpec::parse(*o.init_kind, cfg.init.sigma0);
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  return cfg;
}

void echo_resolved_config(const RunConfig& cfg) {
  atomic_write_text(cfg.out_dir + "/config-resolved.json", config_to_json(cfg).dump(2) + "\n");
}

int finish(const SweepResult& result) {
  bool any_finite = false;
  for (const auto& r : result.runs)
    if (r.has_finite_best()) any_finite = true;
  for (const auto& r : result.runs)
    std::cout << r.config.benchmark << ' ' << r.config.method << " seed=" << r.config.seed
              << " stop=" << to_string(r.stop_reason) << " checkpoints=" << r.records.size()
              << (r.has_finite_best()
                      ? " best[" + r.monitor_key + "]=" +
                            format_double(r.records[r.best_checkpoint].metrics.at(r.monitor_key))
                      : " best=none")
              << '\n';
  return any_finite ? 0 : 3;
}

int run_validate() {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << '\n';
    if (!ok) ++failures;
  };
  RngStream rng(17);

  {  // gradient checks on the closed-form targets
    std::vector<std::shared_ptr<TargetModel>> targets = {
        make_std_gauss(3), make_gauss50(), make_banana(), make_ring(), make_squiggly(),
        make_two_moons(), make_funnel(), make_mix8().first};
    bool ok = true;
    RngStream stream = rng.substream("validate-grad");
    for (const auto& t : targets) {
      for (int rep = 0; rep < 20; ++rep) {
        Vector x(t->dim());
        for (Index i = 0; i < x.size(); ++i) x(i) = 2.0 * stream.normal();
        if (score_fd_error(*t, x, 1e-5) > 1e-5) ok = false;
      }
    }
    report("score gradients vs central finite differences", ok);
  }
  {  // controller vs the integer oracle
    bool ok = true;
    RngStream stream = rng.substream("validate-controller");
    for (int rep = 0; rep < 1000; ++rep) {
      const double rho = stream.uniform() * 10.0;
      const double tol = 1e-4 + stream.uniform();
      const int m_min = 1 + static_cast<int>(stream.uniform_index(4));
      const int m_max = m_min + static_cast<int>(stream.uniform_index(20));
      if (substep_controller(rho, tol, m_min, m_max) != controller_oracle(rho, tol, m_min, m_max))
        ok = false;
    }
    report("substep controller vs integer oracle", ok);
  }
  {  // field identity against the scalar velocity oracle
    bool ok = true;
    RngStream stream = rng.substream("validate-fields");
    auto target = make_std_gauss(3);
    KernelSpec kernel;
    StepConfig cfg;
    for (int rep = 0; rep < 20; ++rep) {
      Ensemble ens;
      ens.particles = Matrix(16, 3);
      for (Index i = 0; i < 16; ++i)
        for (Index j = 0; j < 3; ++j) ens.particles(i, j) = 2.0 * stream.normal();
      CostCounters ctr;
      const FieldPair f = compute_fields(ens, *target, kernel, cfg, ctr);
      const Matrix phi = velocity_oracle(ens.particles, *target, kernel, cfg.clip_bound);
      if (max_ulp_distance(f.drift + f.repulsion, phi) > 8.0) ok = false;
    }
    report("drift + repulsion vs velocity oracle (8 ulps)", ok);
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"particle-based Bayesian sampling benchmark harness"};
  app.require_subcommand(1);

  CliOverrides run_opts, sweep_opts;
  std::vector<std::string> sweep_methods{"svgd", "strang", "mr", "adapt-mr", "sgld", "sghmc"};
  std::vector<std::uint64_t> sweep_seeds{0, 1, 2, 3, 4};
  std::vector<std::string> summarize_inputs;
  std::string summarize_out = "out";

  auto* cmd_run = app.add_subcommand("run", "run one (benchmark, method, seed) configuration");
  add_override_flags(cmd_run, run_opts, true);

  auto* cmd_sweep = app.add_subcommand("sweep", "run a benchmark across methods and seeds");
  add_override_flags(cmd_sweep, sweep_opts, true);
  cmd_sweep->add_option("--methods", sweep_methods, "methods to sweep");
  cmd_sweep->add_option("--seeds", sweep_seeds, "seeds to sweep");

  auto* cmd_summarize = app.add_subcommand("summarize", "fold checkpoint CSVs into summary tables");
  cmd_summarize->add_option("inputs", summarize_inputs, "checkpoint CSV files")->required();
  cmd_summarize->add_option("--out", summarize_out, "output directory");

  auto* cmd_validate = app.add_subcommand("validate", "gradient and oracle self-checks");

  try {
    app.parse(argc, argv);
    if (cmd_run->parsed()) {
      RunConfig cfg = resolve_config(run_opts);
      echo_resolved_config(cfg);
      SweepResult result = summarize_runs({run(cfg)});
      emit_outputs(result, cfg.out_dir);
      return finish(result);
    }
    if (cmd_sweep->parsed()) {
      RunConfig cfg = resolve_config(sweep_opts);
      echo_resolved_config(cfg);
      SweepResult result = sweep(cfg, sweep_methods, sweep_seeds);
      emit_outputs(result, cfg.out_dir);
      return finish(result);
    }
    if (cmd_summarize->parsed()) {
      SweepResult result = summarize_csv_files(summarize_inputs);
      atomic_write_text(summarize_out + "/summary.csv", summary_csv(result));
      atomic_write_text(summarize_out + "/summary.json", summary_json(result).dump(2) + "\n");
      std::cout << summary_csv(result);
      return 0;
    }
    if (cmd_validate->parsed()) return run_validate();
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
