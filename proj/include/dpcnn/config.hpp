// Line-oriented `key = value` configuration with [section] headers.
// The raw file bytes are kept so a run can echo its configuration verbatim.
#pragma once

#include <map>
#include <string>

#include "dpcnn/dataset.hpp"
#include "dpcnn/dpcnn.hpp"

namespace dpcnn {

class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  long get_long(const std::string& section, const std::string& key,
                long fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<double> get_doubles(const std::string& section,
                                  const std::string& key) const;

  const std::string& raw() const { return raw_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string raw_;
};

// Everything a run needs, resolved from defaults + config file + flag
// overrides. `raw_config` echoes byte-identically into the run directory.
struct RunConfig {
  GenSpec gen;
  TrainConfig train;
  Strategy strategy = Strategy::kOptimized;
  std::vector<double> sweep_sigmas{0.0, 0.025, 0.1};
  std::vector<Strategy> sweep_strategies{
      Strategy::kCenter, Strategy::kAll, Strategy::kOffAxis,
      Strategy::kRandomSigned, Strategy::kDpc, Strategy::kOptimized};
  int trials = 5;
  int jobs = 1;
  std::string out_dir = "runs";
  std::string data_dir = "data";
  std::string raw_config;

  static RunConfig from(const Config& cfg);
};

// FNV-1a over the bytes that determine a run's outputs; names run directories.
uint64_t config_hash(const std::string& bytes);
std::string hash_hex(uint64_t h);

}  // namespace dpcnn
