// Trial execution, artifact layout, and the noise-level x strategy report.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpcnn/config.hpp"
#include "dpcnn/dataset.hpp"
#include "dpcnn/dpcnn.hpp"

namespace dpcnn {

// Artifacts of one trial directory: metrics.json, predictions.csv,
// loss_trace.csv, checkpoint.dpck, pattern.csv/.pgm.
struct TrialArtifacts {
  double test_accuracy = 0.0;
  std::vector<int> predictions;
  std::vector<int> labels;
  std::vector<double> w;
  uint64_t seed = 0;
  std::string strategy;
};

// Runs one (strategy, seed) trial and writes its artifacts under `dir`.
// If `dir` already holds a metrics.json the stored result is returned
// untouched, which makes reruns idempotent.
TrialArtifacts run_trial(const Dataset& train, const Dataset& test,
                         Strategy strategy, const TrainConfig& cfg,
                         const std::string& dir);

std::optional<TrialArtifacts> load_trial(const std::string& dir);

// Renders (or reuses) the dataset pair for one sample-noise level.
// Files land in data_dir as phase_<tag>.train.dpc / .test.dpc.
struct DatasetPair {
  std::string train_path, test_path;
};
DatasetPair ensure_dataset(const GenSpec& spec, double sample_sigma,
                           const std::string& data_dir);

// ---------------------------------------------------------------------------

struct ReportCell {
  std::vector<double> trial_accuracies;
  double mean = 0.0;
  double stddev = 0.0;
  double majority_accuracy = 0.0;
  int failed_trials = 0;
};

struct ReportTable {
  std::vector<double> sigmas;            // rows
  std::vector<Strategy> strategies;      // columns
  std::vector<std::vector<ReportCell>> cells;  // [row][col]

  bool operator==(const ReportTable& other) const;
};

struct SweepSpec {
  GenSpec gen;
  TrainConfig train;
  std::vector<double> sigmas;
  std::vector<Strategy> strategies;
  int trials = 5;
  std::string data_dir = "data";
  std::string out_dir = "runs";
  int jobs = 1;
  // when non-empty, trials run as `<self_exe> train ...` worker processes
  std::string self_exe;
};

// Runs trials for every (sigma, strategy, trial) cell with distinct seeds,
// reusing any trial directory that already holds results. Failed trials are
// recorded and excluded from the cell statistics.
ReportTable run_sweep(const SweepSpec& spec);

void write_report_csv(const ReportTable& table, const std::string& path);
void write_report_text(const ReportTable& table, const std::string& path);
ReportTable parse_report_csv(const std::string& path);

std::string format_sigma(double sigma);

}  // namespace dpcnn
