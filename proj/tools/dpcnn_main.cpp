// Command-line front end: dataset generation, training for every
// illumination strategy, noise sweeps, pattern export and the self test.
#include <CLI11.hpp>
#include <json.hpp>

#include <unistd.h>

#include <Eigen/Core>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dpcnn/config.hpp"
#include "dpcnn/dataset.hpp"
#include "dpcnn/dpcnn.hpp"
#include "dpcnn/errors.hpp"
#include "dpcnn/report.hpp"
#include "dpcnn/selfcheck.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dpcnn;

namespace {

struct GlobalOpts {
  std::string config_path;
  long seed = -1;
  std::string out_dir;
  bool deterministic = false;
  int trials = -1;
  int threads = 0;
};

RunConfig resolve_config(const GlobalOpts& g) {
  Config cfg = g.config_path.empty() ? Config() : Config::from_file(g.config_path);
  RunConfig rc = RunConfig::from(cfg);
  if (g.seed >= 0) {
    rc.train.seed = static_cast<uint64_t>(g.seed);
    rc.gen.seed = static_cast<uint64_t>(g.seed);
  }
  if (!g.out_dir.empty()) rc.out_dir = g.out_dir;
  if (g.deterministic) rc.train.deterministic = true;
  if (g.trials > 0) rc.trials = g.trials;
  rc.train.threads = g.threads;
  return rc;
}

std::string effective_key(const RunConfig& rc, const std::string& verb,
                          const std::string& extra) {
  std::ostringstream ss;
  ss << rc.raw_config << '\0' << verb << '\0' << extra << '\0' << rc.train.seed
     << '\0' << rc.gen.seed << '\0' << rc.train.deterministic << '\0'
     << strategy_name(rc.strategy) << '\0' << rc.trials;
  return ss.str();
}

void echo_config(const RunConfig& rc, const std::string& dir) {
  std::ofstream out(fs::path(dir) / "config.ini", std::ios::binary | std::ios::trunc);
  out << rc.raw_config;
}

std::string self_exe_path() {
  char buf[4096];
  const ssize_t n = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) return "";
  buf[n] = '\0';
  return buf;
}

int cmd_gen_data(const GlobalOpts& g, const std::string& out_base) {
  RunConfig rc = resolve_config(g);
  std::string train_path, test_path;
  if (!out_base.empty()) {
    GeneratedData data = generate_dataset(rc.gen);
    if (const fs::path parent = fs::path(out_base).parent_path(); !parent.empty())
      fs::create_directories(parent);
    train_path = out_base + ".train.dpc";
    test_path = out_base + ".test.dpc";
    save_dataset(train_path, data.train);
    save_dataset(test_path, data.test);
    std::printf("objects: %u train + %u test\nleds: %u\nnoise reference: %g\n",
                data.train.header.example_count, data.test.header.example_count,
                data.train.header.led_count,
                static_cast<double>(data.train.header.noise_reference));
  } else {
    const DatasetPair pair =
        ensure_dataset(rc.gen, rc.gen.sensor.sample_sigma, rc.data_dir);
    const Dataset train = load_dataset(pair.train_path);
    std::printf("objects: %u train (+ test set)\nleds: %u\nnoise reference: %g\n",
                train.header.example_count, train.header.led_count,
                static_cast<double>(train.header.noise_reference));
    std::printf("wrote %s\n      %s\n", pair.train_path.c_str(), pair.test_path.c_str());
  }
  return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& strategy_override) {
  RunConfig rc = resolve_config(g);
  if (!strategy_override.empty()) rc.strategy = strategy_from_name(strategy_override);

  const std::string key = effective_key(rc, "train", strategy_name(rc.strategy));
  const std::string dir =
      (fs::path(rc.out_dir) / ("train-" + hash_hex(config_hash(key)))).string();
  if (auto cached = load_trial(dir)) {
    std::printf("run directory %s already complete (accuracy %.4f); skipping\n",
                dir.c_str(), cached->test_accuracy);
    return 0;
  }
  fs::create_directories(dir);
  echo_config(rc, dir);

  const DatasetPair pair =
      ensure_dataset(rc.gen, rc.gen.sensor.sample_sigma, rc.data_dir);
  const Dataset train = load_dataset(pair.train_path);
  const Dataset test = load_dataset(pair.test_path);

  const auto t0 = std::chrono::steady_clock::now();
  const TrialArtifacts art = run_trial(train, test, rc.strategy, rc.train, dir);
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0).count();
  {
    std::ofstream timing(fs::path(dir) / "timing.txt", std::ios::trunc);
    timing << secs << " s\n";
  }
  std::printf("strategy %s seed %llu: test accuracy %.4f (%.1f s)\n",
              art.strategy.c_str(), static_cast<unsigned long long>(art.seed),
              art.test_accuracy, secs);
  std::printf("artifacts: %s\n", dir.c_str());
  return 0;
}

// worker used by `sweep --jobs N`; also handy for scripting a single trial
int cmd_run_trial(const std::string& train_path, const std::string& test_path,
                  const std::string& strategy, uint64_t seed, long iterations,
                  int batch, double step_size, double dropout_keep, int threads,
                  bool deterministic, const std::string& trial_dir) {
  if (load_trial(trial_dir)) return 0;
  TrainConfig cfg;
  cfg.iterations = iterations;
  cfg.batch = batch;
  cfg.step_size = step_size;
  cfg.dropout_keep = dropout_keep;
  cfg.seed = seed;
  cfg.deterministic = deterministic;
  cfg.threads = threads;
  const Dataset train = load_dataset(train_path);
  const Dataset test = load_dataset(test_path);
  const TrialArtifacts art =
      run_trial(train, test, strategy_from_name(strategy), cfg, trial_dir);
  std::printf("%s seed %llu: accuracy %.4f\n", strategy.c_str(),
              static_cast<unsigned long long>(seed), art.test_accuracy);
  return 0;
}

int cmd_sweep(const GlobalOpts& g, int jobs_override) {
  RunConfig rc = resolve_config(g);
  SweepSpec spec;
  spec.gen = rc.gen;
  spec.train = rc.train;
  spec.sigmas = rc.sweep_sigmas;
  spec.strategies = rc.sweep_strategies;
  spec.trials = rc.trials;
  spec.data_dir = rc.data_dir;
  spec.jobs = jobs_override > 0 ? jobs_override : rc.jobs;
  if (spec.jobs > 1) spec.self_exe = self_exe_path();

  const std::string key = effective_key(rc, "sweep", "");
  const std::string dir =
      (fs::path(rc.out_dir) / ("sweep-" + hash_hex(config_hash(key)))).string();
  spec.out_dir = dir;
  fs::create_directories(dir);
  echo_config(rc, dir);

  const ReportTable table = run_sweep(spec);
  write_report_csv(table, (fs::path(dir) / "report.csv").string());
  write_report_text(table, (fs::path(dir) / "report.txt").string());

  std::ifstream txt(fs::path(dir) / "report.txt");
  std::cout << txt.rdbuf();
  std::printf("report: %s\n", (fs::path(dir) / "report.csv").string().c_str());
  int failed = 0;
  for (const auto& row : table.cells)
    for (const ReportCell& cell : row) failed += cell.failed_trials;
  if (failed > 0) std::printf("warning: %d failed trials excluded\n", failed);
  return 0;
}

struct LoadedPattern {
  std::vector<double> w;
  LedArray array;
};

LoadedPattern load_pattern_from_run(const std::string& run_dir) {
  const fs::path metrics = fs::path(run_dir) / "metrics.json";
  if (!fs::exists(metrics))
    throw IoError("export: missing artifact " + metrics.string());
  std::ifstream in(metrics);
  json j = json::parse(in);
  LoadedPattern p;
  p.w = j.at("w").get<std::vector<double>>();
  for (const auto& led : j.at("leds")) {
    Led l;
    l.sx = led.at(0).get<double>();
    l.sy = led.at(1).get<double>();
    l.bright_field = led.at(2).get<int>() != 0;
    l.ring_index = led.at(3).get<int>();
    p.array.leds.push_back(l);
  }
  return p;
}

int cmd_export(const std::vector<std::string>& run_dirs, std::string out_dir) {
  if (run_dirs.empty()) throw std::invalid_argument("export: no run directories given");
  if (out_dir.empty()) out_dir = (fs::path(run_dirs[0]) / "export").string();
  fs::create_directories(out_dir);

  std::vector<std::vector<double>> patterns;
  LedArray array;
  for (const std::string& dir : run_dirs) {
    LoadedPattern p = load_pattern_from_run(dir);
    if (!patterns.empty() && p.w.size() != patterns.front().size())
      throw std::invalid_argument("export: mismatched LED counts across runs");
    patterns.push_back(canonicalize_sign(p.w));
    array = p.array;
  }

  const size_t L = patterns.front().size();
  std::vector<double> mean(L, 0.0), var(L, 0.0);
  for (const auto& w : patterns)
    for (size_t l = 0; l < L; ++l) mean[l] += w[l];
  for (double& m : mean) m /= static_cast<double>(patterns.size());
  for (const auto& w : patterns)
    for (size_t l = 0; l < L; ++l) var[l] += (w[l] - mean[l]) * (w[l] - mean[l]);
  for (double& v : var) v /= static_cast<double>(patterns.size());

  export_pattern(mean, array, (fs::path(out_dir) / "pattern_mean").string());
  if (patterns.size() > 1) {
    export_pattern(var, array, (fs::path(out_dir) / "pattern_var").string());
  }

  const PatternStats stats = pattern_stats(mean, array);
  json j;
  j["trials"] = patterns.size();
  j["ring_energy_fractions"] = stats.ring_energy_fractions;
  j["negative_energy_fraction"] = stats.negative_energy_fraction;
  j["mean_pattern"] = mean;
  j["pattern_variance"] = var;
  std::ofstream out(fs::path(out_dir) / "stats.json", std::ios::trunc);
  out << j.dump(2) << "\n";
  std::printf("exported %zu pattern(s) to %s\n", patterns.size(), out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LED-array illumination optimization and classification pipeline"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "configuration file (key = value sections)");
  app.add_option("--seed", g.seed, "override dataset + training seed");
  app.add_option("--out", g.out_dir, "output directory root");
  app.add_flag("--deterministic", g.deterministic,
               "single-threaded bit-reproducible training");
  app.add_option("--trials", g.trials, "trials per sweep cell");
  app.add_option("--threads", g.threads, "GEMM thread count (0 = default)");

  auto* gen = app.add_subcommand("gen-data", "render a phase-object dataset");
  std::string gen_out;
  gen->add_option("--out-base", gen_out, "explicit output path base (.train/.test.dpc)");

  auto* train = app.add_subcommand("train", "train one strategy on the configured dataset");
  std::string strategy;
  train->add_option("--strategy", strategy,
                    "center|all|off_axis|random_signed|dpc|optimized");

  auto* sweep = app.add_subcommand("sweep", "noise-level x strategy accuracy table");
  int jobs = 0;
  sweep->add_option("--jobs", jobs, "worker processes for trials");

  auto* rt = app.add_subcommand("run-trial", "run a single trial (sweep worker)");
  std::string rt_train, rt_test, rt_strategy, rt_dir;
  uint64_t rt_seed = 1;
  long rt_iters = 10000;
  int rt_batch = 50;
  double rt_step = 1e-4, rt_keep = 0.5;
  rt->add_option("--train-data", rt_train)->required();
  rt->add_option("--test-data", rt_test)->required();
  rt->add_option("--strategy", rt_strategy)->required();
  rt->add_option("--seed", rt_seed)->required();
  rt->add_option("--iterations", rt_iters);
  rt->add_option("--batch", rt_batch);
  rt->add_option("--step-size", rt_step);
  rt->add_option("--dropout-keep", rt_keep);
  rt->add_option("--trial-dir", rt_dir)->required();

  auto* exp = app.add_subcommand("export", "canonicalized pattern + stats from run dirs");
  std::vector<std::string> exp_runs;
  std::string exp_out;
  exp->add_option("runs", exp_runs, "trial run directories");
  exp->add_option("--out-dir", exp_out, "export destination");

  auto* st = app.add_subcommand("selftest", "fast invariant suite");
  std::string corrupt;
  st->add_option("--corrupt", corrupt, "sabotage a named check (test hook)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_gen_data(g, gen_out);
    if (*train) return cmd_train(g, strategy);
    if (*sweep) return cmd_sweep(g, jobs);
    if (*rt)
      return cmd_run_trial(rt_train, rt_test, rt_strategy, rt_seed, rt_iters,
                           rt_batch, rt_step, rt_keep,
                           g.threads > 0 ? g.threads : 1, g.deterministic, rt_dir);
    if (*exp) return cmd_export(exp_runs, exp_out);
    if (*st) return run_selfchecks(corrupt) ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
