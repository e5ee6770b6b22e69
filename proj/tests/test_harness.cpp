#include "svmr/config_json.hpp"
#include "svmr/harness.hpp"
#include "svmr/output.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace svmr;

namespace {

const double kNan = std::numeric_limits<double>::quiet_NaN();

RunConfig small_gauss2d(const std::string& method, std::uint64_t seed) {
  RunConfig cfg = default_config("gauss2d", method);
  cfg.seed = seed;
  cfg.particles = 8;
  cfg.max_iterations = 60;
  cfg.checkpoint_every = 20;
  cfg.patience = 0;
  return cfg;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

// Hand-made run with one checkpoint per (monitor, acc) pair.
RunResult fake_run(const std::string& method, std::uint64_t seed,
                   const std::vector<std::pair<double, double>>& monitor_acc) {
  RunResult r;
  r.config = default_config("uci-fake", method);
  r.config.seed = seed;
  r.metric_keys = {"nll", "acc"};
  r.monitor_key = "nll";
  EarlyStopper stopper(0, 0);
  std::int64_t iter = 0;
  for (const auto& [monitor, acc] : monitor_acc) {
    CheckpointRecord rec;
    rec.iteration = iter;
    rec.metrics["nll"] = monitor;
    rec.metrics["acc"] = acc;
    rec.is_finite = std::isfinite(monitor);
    rec.counters.grad_evals = iter;
    r.records.push_back(rec);
    stopper.observe(monitor);
    iter += 20;
  }
  r.best_checkpoint = stopper.best_index();
  return r;
}

// Minimal structural validator for the subset of JSON Schema the shipped
// schema file uses: type / required / properties / items.
bool validate_schema(const nlohmann::json& schema, const nlohmann::json& value) {
  if (schema.contains("type")) {
    auto matches = [&](const std::string& t) {
      if (t == "object") return value.is_object();
      if (t == "array") return value.is_array();
      if (t == "string") return value.is_string();
      if (t == "integer") return value.is_number_integer();
      if (t == "number") return value.is_number();
      if (t == "boolean") return value.is_boolean();
      if (t == "null") return value.is_null();
      return false;
    };
    const auto& type = schema.at("type");
    bool ok = false;
    if (type.is_string()) ok = matches(type.get<std::string>());
    else
      for (const auto& t : type)
        if (matches(t.get<std::string>())) ok = true;
    if (!ok) return false;
  }
  if (schema.contains("required"))
    for (const auto& key : schema.at("required"))
      if (!value.contains(key.get<std::string>())) return false;
  if (schema.contains("properties") && value.is_object())
    for (const auto& [key, sub] : schema.at("properties").items())
      if (value.contains(key) && !validate_schema(sub, value.at(key))) return false;
  if (schema.contains("items") && value.is_array())
    for (const auto& item : value)
      if (!validate_schema(schema.at("items"), item)) return false;
  return true;
}

}  // namespace

TEST(EarlyStopper, MonitorTraceFromRuleDefinition) {
  // Series 1.0, 0.9, 0.95, 0.96, 0.97 with patience 2: stops after the 4th
  // checkpoint, best is the 2nd.
  EarlyStopper stopper(2, 0);
  EXPECT_FALSE(stopper.observe(1.0).has_value());
  EXPECT_FALSE(stopper.observe(0.9).has_value());
  EXPECT_FALSE(stopper.observe(0.95).has_value());
  const auto reason = stopper.observe(0.96);
  ASSERT_TRUE(reason.has_value());
  EXPECT_EQ(*reason, StopReason::patience);
  EXPECT_EQ(stopper.best_index(), 1);
}

TEST(EarlyStopper, ConsecutiveNonFiniteCheckpointsStop) {
  EarlyStopper stopper(0, 2);
  EXPECT_FALSE(stopper.observe(1.0).has_value());
  EXPECT_FALSE(stopper.observe(kNan).has_value());
  const auto reason = stopper.observe(kNan);
  ASSERT_TRUE(reason.has_value());
  EXPECT_EQ(*reason, StopReason::nonfinite);
}

TEST(EarlyStopper, FiniteValueResetsNonFiniteStreak) {
  EarlyStopper stopper(0, 2);
  stopper.observe(1.0);
  stopper.observe(kNan);
  EXPECT_FALSE(stopper.observe(2.0).has_value());  // worse but finite: streak resets
  EXPECT_FALSE(stopper.observe(kNan).has_value());
  EXPECT_TRUE(stopper.observe(kNan).has_value());
}

TEST(EarlyStopper, NonFiniteNeverImproves) {
  EarlyStopper stopper(0, 0);
  stopper.observe(kNan);
  stopper.observe(5.0);
  stopper.observe(-std::numeric_limits<double>::infinity());
  EXPECT_EQ(stopper.best_index(), 1);
}

TEST(Run, CheckpointCountAtFixedBudget) {
  RunConfig cfg = small_gauss2d("svgd", 0);
  cfg.max_iterations = 100;
  const RunResult r = run(cfg);
  ASSERT_EQ(r.records.size(), 6u);  // initial + 5
  EXPECT_EQ(r.records.front().iteration, 0);
  EXPECT_EQ(r.records.back().iteration, 100);
  EXPECT_EQ(r.stop_reason, StopReason::budget);
}

TEST(Run, CostCountersMatchAnalyticCounts) {
  const std::int64_t n = 8, n2 = 64;
  {
    const RunResult r = run(small_gauss2d("svgd", 1));
    for (const auto& rec : r.records) {
      EXPECT_EQ(rec.counters.grad_evals, n * rec.iteration);
      EXPECT_EQ(rec.counters.kernel_evals, n2 * rec.iteration);
      EXPECT_EQ(rec.counters.grad_batches, rec.iteration);
    }
  }
  {
    RunConfig cfg = small_gauss2d("mr", 1);
    cfg.step.m_fixed = 3;
    const RunResult r = run(cfg);
    for (const auto& rec : r.records) {
      EXPECT_EQ(rec.counters.grad_evals, n * rec.iteration);
      EXPECT_EQ(rec.counters.kernel_evals, 3 * n2 * rec.iteration);
    }
  }
  {
    RunConfig cfg = small_gauss2d("strang", 1);
    cfg.step.strang_half_substeps = 2;
    const RunResult r = run(cfg);
    for (const auto& rec : r.records) {
      EXPECT_EQ(rec.counters.grad_evals, n * rec.iteration);
      EXPECT_EQ(rec.counters.kernel_evals, 4 * n2 * rec.iteration);
    }
  }
  {
    const RunResult r = run(small_gauss2d("adapt-mr", 1));
    for (const auto& rec : r.records) {
      EXPECT_EQ(rec.counters.kernel_evals, n2 * rec.iteration);
      EXPECT_GE(rec.counters.grad_evals, 2 * n * rec.iteration);
    }
  }
  {
    const RunResult r = run(small_gauss2d("sgld", 1));
    for (const auto& rec : r.records) EXPECT_EQ(rec.counters.grad_evals, rec.iteration);
  }
}

TEST(Run, DeterministicCheckpointCsvExceptWallSeconds) {
  const RunConfig cfg = small_gauss2d("adapt-mr", 5);
  const std::string a = checkpoint_csv({run(cfg)});
  const std::string b = checkpoint_csv({run(cfg)});
  auto ra = parse_csv(a), rb = parse_csv(b);
  ASSERT_EQ(ra.size(), rb.size());
  const auto& header = ra.front();
  const auto wall_col = std::find(header.begin(), header.end(), "wall_seconds") - header.begin();
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ASSERT_EQ(ra[i].size(), rb[i].size());
    for (std::size_t j = 0; j < ra[i].size(); ++j) {
      if (static_cast<long>(j) == wall_col && i > 0) continue;
      EXPECT_EQ(ra[i][j], rb[i][j]) << "row " << i << " col " << j;
    }
  }
}

TEST(Run, ChainMethodUsesRollingWindow) {
  RunConfig cfg = small_gauss2d("sgld", 3);
  cfg.chain.window = 16;
  cfg.max_iterations = 40;
  const RunResult r = run(cfg);
  EXPECT_EQ(r.records.size(), 3u);
  // Window metrics exist and the monitor is eventually finite.
  EXPECT_TRUE(r.has_finite_best());
}

TEST(Run, InvalidConfigRejected) {
  RunConfig cfg = small_gauss2d("svgd", 0);
  cfg.step.h = 0.0;
  EXPECT_THROW(run(cfg), ConfigError);
  cfg = small_gauss2d("warp", 0);
  EXPECT_THROW(run(cfg), ConfigError);
  cfg = small_gauss2d("svgd", 0);
  cfg.benchmark = "uci-missing";
  EXPECT_THROW(run(cfg), ConfigError);  // dataset path required
}

TEST(SummarizeRuns, SingleRunSummaryEqualsItsBestRow) {
  const RunConfig cfg = small_gauss2d("svgd", 2);
  RunResult r = run(cfg);
  ASSERT_TRUE(r.has_finite_best());
  const CheckpointRecord best = r.records[static_cast<std::size_t>(r.best_checkpoint)];
  const SweepResult s = summarize_runs({std::move(r)});
  ASSERT_EQ(s.rows.size(), 1u);
  EXPECT_EQ(s.rows[0].finite_seeds, 1);
  for (const auto& key : s.metric_keys)
    EXPECT_DOUBLE_EQ(s.rows[0].metrics.at(key), best.metrics.at(key));
  EXPECT_DOUBLE_EQ(s.rows[0].grad_evals, static_cast<double>(best.counters.grad_evals));
}

TEST(SummarizeRuns, FiniteSeedCountingAndNanExcludedMedian) {
  // Monitor values over five seeds: {0.1, 0.3, 0.2, NaN, 0.15}; the NaN seed
  // never reaches a finite checkpoint, so the median is over the other four.
  std::vector<RunResult> runs;
  runs.push_back(fake_run("mr", 0, {{0.1, 0.9}}));
  runs.push_back(fake_run("mr", 1, {{0.3, 0.1}}));
  runs.push_back(fake_run("mr", 2, {{0.2, 0.5}}));
  runs.push_back(fake_run("mr", 3, {{kNan, 0.99}}));
  runs.push_back(fake_run("mr", 4, {{0.15, 0.4}}));
  const SweepResult s = summarize_runs(std::move(runs));
  ASSERT_EQ(s.rows.size(), 1u);
  EXPECT_EQ(s.rows[0].total_seeds, 5);
  EXPECT_EQ(s.rows[0].finite_seeds, 4);
  // Predictive benchmarks aggregate with a mean; check the median convention
  // through a sampling-benchmark id instead.
  std::vector<RunResult> sampling;
  for (int i = 0; i < 5; ++i) {
    RunResult r = fake_run("mr", i, {{std::vector<double>{0.1, 0.3, 0.2, kNan, 0.15}[i], 0.0}});
    r.config.benchmark = "gauss2d";
    r.metric_keys = {"nll", "acc"};
    sampling.push_back(std::move(r));
  }
  const SweepResult sm = summarize_runs(std::move(sampling));
  EXPECT_DOUBLE_EQ(sm.rows[0].metrics.at("nll"), 0.175);
}

TEST(SummarizeRuns, BestSelectionIgnoresAccuracyTrends) {
  // Accuracy keeps improving while the monitor worsens; the best checkpoint
  // must follow the monitor alone.
  RunResult r = fake_run("svgd", 0, {{0.5, 0.2}, {0.4, 0.5}, {0.6, 0.99}, {0.7, 1.0}});
  const SweepResult s = summarize_runs({std::move(r)});
  EXPECT_DOUBLE_EQ(s.rows[0].metrics.at("nll"), 0.4);
  EXPECT_DOUBLE_EQ(s.rows[0].metrics.at("acc"), 0.5);
}

TEST(Output, EmptyResultGivesHeaderOnlyCsv) {
  const std::string csv = checkpoint_csv({});
  EXPECT_EQ(parse_csv(csv).size(), 1u);
}

TEST(Output, CsvColumnOrderIsFixed) {
  const RunResult r = run(small_gauss2d("svgd", 7));
  const auto rows = parse_csv(checkpoint_csv({r}));
  std::vector<std::string> expected = {"benchmark", "method", "seed", "iteration"};
  for (const auto& k : r.metric_keys) expected.push_back(k);
  for (const auto& k : {"grad_evals", "grad_batches", "kernel_evals", "wall_seconds", "is_finite"})
    expected.push_back(k);
  EXPECT_EQ(rows.front(), expected);
}

TEST(Output, SummarizeCsvRoundTrip) {
  const RunConfig base = small_gauss2d("svgd", 0);
  std::vector<RunResult> runs;
  for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
    RunConfig cfg = base;
    cfg.seed = seed;
    runs.push_back(run(cfg));
  }
  const std::string csv = checkpoint_csv(runs);
  const std::string direct = summary_csv(summarize_runs(std::move(runs)));

  const auto tmp = std::filesystem::temp_directory_path() / "svmr_ckpt.csv";
  std::ofstream(tmp) << csv;
  const std::string folded = summary_csv(summarize_csv_files({tmp.string()}));
  EXPECT_EQ(direct, folded);
  std::filesystem::remove(tmp);
}

TEST(Output, SummaryJsonValidatesAgainstShippedSchema) {
  const SweepResult s = summarize_runs({run(small_gauss2d("svgd", 1))});
  const nlohmann::json j = summary_json(s);
  std::ifstream schema_in(std::string(SVMR_SOURCE_DIR) + "/schema/summary.schema.json");
  ASSERT_TRUE(schema_in.good());
  nlohmann::json schema;
  schema_in >> schema;
  EXPECT_TRUE(validate_schema(schema, j));
  EXPECT_FALSE(validate_schema(schema, nlohmann::json::array()));
}

TEST(Output, EmitOutputsWritesAtomically) {
  const auto dir = std::filesystem::temp_directory_path() / "svmr_out_test";
  std::filesystem::remove_all(dir);
  const SweepResult s = summarize_runs({run(small_gauss2d("svgd", 4))});
  emit_outputs(s, dir.string());
  for (const auto& name :
       {"checkpoints.csv", "summary.csv", "summary.json", "monitor.svg", "pareto.svg"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
    EXPECT_FALSE(std::filesystem::exists(dir / (std::string(name) + ".tmp")));
  }
  std::filesystem::remove_all(dir);
}

TEST(Config, DefaultsFollowBenchmarkProtocol) {
  const RunConfig gauss = default_config("gauss50", "svgd");
  EXPECT_EQ(gauss.checkpoint_every, 50);
  EXPECT_EQ(gauss.monitor, "ksd");
  const RunConfig mix = default_config("mix8", "svgd");
  EXPECT_EQ(mix.patience, 0);
  EXPECT_EQ(mix.kernel.kind, KernelKind::multiscale_rbf);
  const RunConfig hlr = default_config("hlr-longtail", "mr");
  EXPECT_EQ(hlr.particles, 32);
  EXPECT_EQ(hlr.nonfinite_limit, 2);
  EXPECT_EQ(hlr.monitor, "nll");
}

TEST(Config, JsonRoundTripAndOverrides) {
  const auto path = std::filesystem::temp_directory_path() / "svmr_cfg.json";
  {
    nlohmann::json j;
    j["benchmark"] = "mix8";
    j["method"] = "adapt-mr";
    j["seed"] = 9;
    j["step"] = {{"h", 0.125}, {"m_max", 12}};
    j["kernel"] = {{"scale_factor", 2.0}};
    j["monitor"] = "ksd";
    std::ofstream(path) << j.dump(2);
  }
  const RunConfig cfg = config_from_file(path.string());
  EXPECT_EQ(cfg.benchmark, "mix8");
  EXPECT_EQ(cfg.method, "adapt-mr");
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_DOUBLE_EQ(cfg.step.h, 0.125);
  EXPECT_EQ(cfg.step.m_max, 12);
  EXPECT_DOUBLE_EQ(cfg.kernel.scale_factor, 2.0);
  EXPECT_EQ(cfg.patience, 0);  // mix8 default survives partial override
  EXPECT_FALSE(cfg.monitor_overridden);

  nlohmann::json bad;
  bad["benchark"] = "typo";
  RunConfig c = default_config("gauss2d", "svgd");
  EXPECT_THROW(apply_config_json(c, bad), ConfigError);
  std::filesystem::remove(path);
}

TEST(Config, MonitorOverrideIsFlagged) {
  RunConfig cfg = default_config("gauss2d", "svgd");
  nlohmann::json j;
  j["monitor"] = "nll";
  apply_config_json(cfg, j);
  EXPECT_TRUE(cfg.monitor_overridden);
  EXPECT_EQ(config_to_json(cfg)["monitor_overridden"], true);
}

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SVMR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST(Cli, ExitCodesFollowContract) {
  EXPECT_EQ(run_cli("run --benchmark no-such-benchmark"), 1);
  EXPECT_EQ(run_cli("summarize /no/such/file.csv"), 2);
  const auto dir = std::filesystem::temp_directory_path() / "svmr_cli_out";
  std::filesystem::remove_all(dir);
  EXPECT_EQ(run_cli("run --benchmark gauss2d --particles 8 --max-iterations 20 --out " +
                    dir.string()),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "config-resolved.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoints.csv"));
  std::filesystem::remove_all(dir);
}

TEST(Cli, AllRunsWithoutFiniteCheckpointExitThree) {
  // A huge funnel initialization saturates exp(-v) and produces non-finite
  // scores, so KSD is NaN from the first checkpoint on.
  const auto dir = std::filesystem::temp_directory_path() / "svmr_cli_nan";
  std::filesystem::remove_all(dir);
  EXPECT_EQ(run_cli("run --benchmark 2d-funnel --sigma0 1000 --seed 0 --particles 64 "
                    "--max-iterations 0 --out " +
                    dir.string()),
            3);
  std::filesystem::remove_all(dir);
}
