#include "dpcnn/report.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dpcnn/errors.hpp"

namespace dpcnn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_sigma(double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", sigma);
  return buf;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("short write to " + path);
}

std::string gen_tag(const GenSpec& g, double sample_sigma) {
  std::ostringstream ss;
  ss << g.idx_images << '|' << g.idx_labels << '|' << g.train_count << '|'
     << g.test_count << '|' << g.seed << '|' << g.grid.side_px << '|'
     << g.grid.pitch_um << '|' << g.grid.wavelength_um << '|' << g.na << '|'
     << g.led_pitch_sine << '|' << g.phase.refractive_index << '|'
     << g.phase.max_thickness_um << '|' << g.phase.absorption_alpha << '|'
     << static_cast<int>(g.phase.amplitude_convention) << '|'
     << g.sensor.side_px << '|' << g.sensor.readout_sigma << '|' << sample_sigma
     << '|' << g.class_count;
  for (double r : g.ring_sines) ss << "|r" << r;
  for (int c : g.ring_counts) ss << "|c" << c;
  return hash_hex(config_hash(ss.str())).substr(0, 10);
}

}  // namespace

DatasetPair ensure_dataset(const GenSpec& spec, double sample_sigma,
                           const std::string& data_dir) {
  GenSpec g = spec;
  g.sensor.sample_sigma = sample_sigma;
  const std::string base =
      (fs::path(data_dir) / ("phase_" + gen_tag(g, sample_sigma))).string();
  DatasetPair pair{base + ".train.dpc", base + ".test.dpc"};
  if (fs::exists(pair.train_path) && fs::exists(pair.test_path)) return pair;
  fs::create_directories(data_dir);
  GeneratedData data = generate_dataset(g);
  save_dataset(pair.train_path, data.train);
  save_dataset(pair.test_path, data.test);
  return pair;
}

// ---------------------------------------------------------------------------
// trial artifacts

std::optional<TrialArtifacts> load_trial(const std::string& dir) {
  const fs::path metrics = fs::path(dir) / "metrics.json";
  const fs::path preds = fs::path(dir) / "predictions.csv";
  if (!fs::exists(metrics) || !fs::exists(preds)) return std::nullopt;
  TrialArtifacts art;
  try {
    std::ifstream in(metrics);
    json j = json::parse(in);
    art.test_accuracy = j.at("test_accuracy").get<double>();
    art.w = j.at("w").get<std::vector<double>>();
    art.seed = j.at("seed").get<uint64_t>();
    art.strategy = j.at("strategy").get<std::string>();

    std::ifstream pin(preds);
    std::string line;
    std::getline(pin, line);  // header
    while (std::getline(pin, line)) {
      if (line.empty()) continue;
      int idx, label, pred;
      if (std::sscanf(line.c_str(), "%d,%d,%d", &idx, &label, &pred) != 3)
        return std::nullopt;
      art.predictions.push_back(pred);
      art.labels.push_back(label);
    }
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return art;
}

TrialArtifacts run_trial(const Dataset& train, const Dataset& test,
                         Strategy strategy, const TrainConfig& cfg,
                         const std::string& dir) {
  if (auto cached = load_trial(dir)) return *cached;
  fs::create_directories(dir);

  TrainedModel<float> trained;
  if (strategy == Strategy::kOptimized) {
    trained = train_dpcnn<float>(train, test, cfg);
  } else {
    std::vector<double> w;
    if (strategy == Strategy::kRandomSigned) {
      Rng rng = make_stream(cfg.seed, StreamTag::kPattern);
      w = baseline_pattern(strategy, train.led_array(), &rng);
    } else {
      w = baseline_pattern(strategy, train.led_array());
    }
    trained = train_fixed<float>(train, test, w, cfg);
  }
  const TrialResult& res = trained.result;

  // checkpoint, pattern, traces, predictions; metrics.json last as the
  // completion marker
  save_trial_checkpoint((fs::path(dir) / "checkpoint.dpck").string(), trained.w,
                        *trained.model);
  export_pattern(res.w, train.led_array(), (fs::path(dir) / "pattern").string());

  {
    std::ostringstream ss;
    ss << "iteration,loss\n";
    for (size_t i = 0; i < res.loss_trace.size(); ++i)
      ss << i << ',' << fmt17(res.loss_trace[i]) << '\n';
    write_text_file((fs::path(dir) / "loss_trace.csv").string(), ss.str());
  }
  {
    std::ostringstream ss;
    ss << "index,label,prediction\n";
    for (size_t i = 0; i < res.predictions.size(); ++i)
      ss << i << ',' << test.examples[i].label << ',' << res.predictions[i] << '\n';
    write_text_file((fs::path(dir) / "predictions.csv").string(), ss.str());
  }
  {
    json j;
    j["strategy"] = strategy_name(strategy);
    j["seed"] = cfg.seed;
    j["iterations"] = cfg.iterations;
    j["batch"] = cfg.batch;
    j["step_size"] = cfg.step_size;
    j["optimizer"] = cfg.optimizer == TrainConfig::Optimizer::kAdam ? "adam" : "sgd";
    j["dropout_keep"] = cfg.dropout_keep;
    j["deterministic"] = cfg.deterministic;
    j["test_accuracy"] = res.test_accuracy;
    j["final_loss"] = res.loss_trace.empty() ? 0.0 : res.loss_trace.back();
    j["confusion"] = res.confusion;
    j["w"] = res.w;
    j["led_count"] = train.header.led_count;
    json leds = json::array();
    for (const Led& led : train.header.leds)
      leds.push_back({led.sx, led.sy, led.bright_field ? 1 : 0, led.ring_index});
    j["leds"] = leds;
    j["test_examples"] = test.examples.size();
    write_text_file((fs::path(dir) / "metrics.json").string(), j.dump(2) + "\n");
  }

  TrialArtifacts art;
  art.test_accuracy = res.test_accuracy;
  art.predictions = res.predictions;
  art.labels.reserve(test.examples.size());
  for (const auto& ex : test.examples) art.labels.push_back(ex.label);
  art.w = res.w;
  art.seed = cfg.seed;
  art.strategy = strategy_name(strategy);
  return art;
}

// ---------------------------------------------------------------------------
// sweep

namespace {

uint64_t trial_seed(uint64_t base, size_t row, size_t col, int k) {
  uint64_t s = base;
  splitmix64(s);
  s ^= 0x51ed2700ull + row * 1000003ull + col * 10007ull + static_cast<uint64_t>(k);
  return s;
}

std::string trial_dir(const std::string& out_dir, double sigma, Strategy strategy,
                      int k) {
  return (fs::path(out_dir) / ("s" + format_sigma(sigma)) / strategy_name(strategy) /
          ("trial" + std::to_string(k)))
      .string();
}

// Spawns `argv` as a child process; returns its exit status.
int spawn_and_wait_batch(const std::vector<std::vector<std::string>>& commands,
                         int jobs, std::vector<int>& statuses) {
  statuses.assign(commands.size(), -1);
  size_t next = 0;
  std::vector<std::pair<pid_t, size_t>> running;
  int failures = 0;
  while (next < commands.size() || !running.empty()) {
    while (next < commands.size() && static_cast<int>(running.size()) < jobs) {
      std::vector<char*> argv;
      for (const std::string& a : commands[next])
        argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      const pid_t pid = fork();
      if (pid == 0) {
        execv(argv[0], argv.data());
        _exit(127);
      }
      if (pid < 0) throw IoError("sweep: fork failed");
      running.emplace_back(pid, next);
      ++next;
    }
    int status = 0;
    const pid_t done = waitpid(-1, &status, 0);
    for (size_t i = 0; i < running.size(); ++i) {
      if (running[i].first != done) continue;
      const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
      statuses[running[i].second] = code;
      if (code != 0) ++failures;
      running.erase(running.begin() + static_cast<long>(i));
      break;
    }
  }
  return failures;
}

}  // namespace

ReportTable run_sweep(const SweepSpec& spec) {
  ReportTable table;
  table.sigmas = spec.sigmas;
  table.strategies = spec.strategies;
  table.cells.assign(spec.sigmas.size(),
                     std::vector<ReportCell>(spec.strategies.size()));

  for (size_t row = 0; row < spec.sigmas.size(); ++row) {
    const double sigma = spec.sigmas[row];
    const DatasetPair paths = ensure_dataset(spec.gen, sigma, spec.data_dir);

    // worker-process mode: launch missing trials via the CLI, then collect
    if (!spec.self_exe.empty() && spec.jobs > 1) {
      std::vector<std::vector<std::string>> commands;
      for (size_t col = 0; col < spec.strategies.size(); ++col)
        for (int k = 0; k < spec.trials; ++k) {
          const std::string dir = trial_dir(spec.out_dir, sigma, spec.strategies[col], k);
          if (load_trial(dir)) continue;
          const uint64_t seed = trial_seed(spec.train.seed, row, col, k);
          commands.push_back(
              {spec.self_exe, "run-trial", "--train-data", paths.train_path,
               "--test-data", paths.test_path, "--strategy",
               strategy_name(spec.strategies[col]), "--seed", std::to_string(seed),
               "--iterations", std::to_string(spec.train.iterations), "--batch",
               std::to_string(spec.train.batch), "--step-size",
               std::to_string(spec.train.step_size), "--dropout-keep",
               std::to_string(spec.train.dropout_keep), "--threads", "1",
               "--trial-dir", dir});
        }
      std::vector<int> statuses;
      spawn_and_wait_batch(commands, spec.jobs, statuses);
    }

    Dataset train, test;
    bool loaded = false;
    for (size_t col = 0; col < spec.strategies.size(); ++col) {
      ReportCell& cell = table.cells[row][col];
      std::vector<std::vector<int>> prediction_sets;
      std::vector<int> labels;
      for (int k = 0; k < spec.trials; ++k) {
        const std::string dir = trial_dir(spec.out_dir, sigma, spec.strategies[col], k);
        std::optional<TrialArtifacts> art = load_trial(dir);
        if (!art) {
          try {
            if (!loaded) {
              train = load_dataset(paths.train_path);
              test = load_dataset(paths.test_path);
              loaded = true;
            }
            TrainConfig cfg = spec.train;
            cfg.seed = trial_seed(spec.train.seed, row, col, k);
            cfg.threads = spec.train.threads;
            art = run_trial(train, test, spec.strategies[col], cfg, dir);
          } catch (const std::exception& e) {
            std::fprintf(stderr, "sweep: trial failed (%s sigma=%s k=%d): %s\n",
                         strategy_name(spec.strategies[col]),
                         format_sigma(sigma).c_str(), k, e.what());
            cell.failed_trials++;
            continue;
          }
        }
        cell.trial_accuracies.push_back(art->test_accuracy);
        prediction_sets.push_back(art->predictions);
        if (labels.empty()) labels = art->labels;
      }
      const size_t n = cell.trial_accuracies.size();
      if (n > 0) {
        double mean = 0.0;
        for (double a : cell.trial_accuracies) mean += a;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double a : cell.trial_accuracies) var += (a - mean) * (a - mean);
        cell.mean = mean;
        cell.stddev = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
        const std::vector<int> vote = majority_vote(prediction_sets);
        long correct = 0;
        for (size_t i = 0; i < vote.size(); ++i)
          if (vote[i] == labels[i]) ++correct;
        cell.majority_accuracy =
            vote.empty() ? 0.0 : static_cast<double>(correct) / vote.size();
      }
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// report serialization

bool ReportTable::operator==(const ReportTable& other) const {
  if (sigmas != other.sigmas || strategies != other.strategies) return false;
  if (cells.size() != other.cells.size()) return false;
  for (size_t r = 0; r < cells.size(); ++r) {
    if (cells[r].size() != other.cells[r].size()) return false;
    for (size_t c = 0; c < cells[r].size(); ++c) {
      const ReportCell& a = cells[r][c];
      const ReportCell& b = other.cells[r][c];
      if (a.trial_accuracies != b.trial_accuracies || a.mean != b.mean ||
          a.stddev != b.stddev || a.majority_accuracy != b.majority_accuracy ||
          a.failed_trials != b.failed_trials)
        return false;
    }
  }
  return true;
}

void write_report_csv(const ReportTable& table, const std::string& path) {
  std::ostringstream ss;
  ss << "sigma,strategy,mean,std,majority,failed,accuracies\n";
  for (size_t r = 0; r < table.sigmas.size(); ++r)
    for (size_t c = 0; c < table.strategies.size(); ++c) {
      const ReportCell& cell = table.cells[r][c];
      ss << fmt17(table.sigmas[r]) << ',' << strategy_name(table.strategies[c])
         << ',' << fmt17(cell.mean) << ',' << fmt17(cell.stddev) << ','
         << fmt17(cell.majority_accuracy) << ',' << cell.failed_trials << ',';
      for (size_t k = 0; k < cell.trial_accuracies.size(); ++k) {
        if (k) ss << ';';
        ss << fmt17(cell.trial_accuracies[k]);
      }
      ss << '\n';
    }
  write_text_file(path, ss.str());
}

ReportTable parse_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("parse_report_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("parse_report_csv: empty file");
  ReportTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string sigma_s, strat_s, mean_s, std_s, maj_s, failed_s, accs_s;
    std::getline(ss, sigma_s, ',');
    std::getline(ss, strat_s, ',');
    std::getline(ss, mean_s, ',');
    std::getline(ss, std_s, ',');
    std::getline(ss, maj_s, ',');
    std::getline(ss, failed_s, ',');
    std::getline(ss, accs_s);

    const double sigma = std::stod(sigma_s);
    const Strategy strat = strategy_from_name(strat_s);
    size_t row = table.sigmas.size();
    for (size_t r = 0; r < table.sigmas.size(); ++r)
      if (table.sigmas[r] == sigma) row = r;
    if (row == table.sigmas.size()) {
      table.sigmas.push_back(sigma);
      table.cells.emplace_back();
    }
    if (row == 0) table.strategies.push_back(strat);

    ReportCell cell;
    cell.mean = std::stod(mean_s);
    cell.stddev = std::stod(std_s);
    cell.majority_accuracy = std::stod(maj_s);
    cell.failed_trials = std::stoi(failed_s);
    std::istringstream accs(accs_s);
    std::string a;
    while (std::getline(accs, a, ';'))
      if (!a.empty()) cell.trial_accuracies.push_back(std::stod(a));
    table.cells[row].push_back(cell);
  }
  return table;
}

void write_report_text(const ReportTable& table, const std::string& path) {
  std::ostringstream ss;
  ss << std::left;
  ss.width(22);
  ss << "Noise Level";
  for (Strategy s : table.strategies) {
    std::string name = strategy_name(s);
    if (name == "off_axis") name = "Off-axis";
    else if (name == "random_signed") name = "Random";
    else if (name == "dpc") name = "DPC";
    else name[0] = static_cast<char>(std::toupper(name[0]));
    ss.width(11);
    ss << name;
  }
  ss << '\n';
  std::vector<double> column_sums(table.strategies.size(), 0.0);
  for (size_t r = 0; r < table.sigmas.size(); ++r) {
    char label[64];
    std::snprintf(label, sizeof(label), "sigma=%s", format_sigma(table.sigmas[r]).c_str());
    ss.width(22);
    ss << label;
    for (size_t c = 0; c < table.strategies.size(); ++c) {
      char cellbuf[32];
      std::snprintf(cellbuf, sizeof(cellbuf), "%.3f", table.cells[r][c].mean);
      ss.width(11);
      ss << cellbuf;
      column_sums[c] += table.cells[r][c].mean;
    }
    ss << '\n';
  }
  if (table.sigmas.size() > 1) {
    ss.width(22);
    ss << "Average";
    for (size_t c = 0; c < table.strategies.size(); ++c) {
      char cellbuf[32];
      std::snprintf(cellbuf, sizeof(cellbuf), "%.3f",
                    column_sums[c] / static_cast<double>(table.sigmas.size()));
      ss.width(11);
      ss << cellbuf;
    }
    ss << '\n';
  }
  write_text_file(path, ss.str());
}

}  // namespace dpcnn
