#include "dpcnn/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dpcnn/errors.hpp"

namespace dpcnn {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  cfg.raw_ = text;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: bad section header at line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " +
                                  std::to_string(lineno));
    cfg.sections_[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  const std::string v = get(section, key, "");
  return v.empty() ? fallback : std::stod(v);
}

long Config::get_long(const std::string& section, const std::string& key,
                      long fallback) const {
  const std::string v = get(section, key, "");
  return v.empty() ? fallback : std::stol(v);
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  const std::string v = get(section, key, "");
  if (v.empty()) return fallback;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: bad boolean for " + section + "." + key);
}

std::vector<double> Config::get_doubles(const std::string& section,
                                        const std::string& key) const {
  std::vector<double> out;
  std::string v = get(section, key, "");
  if (v.empty()) return out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

RunConfig RunConfig::from(const Config& cfg) {
  RunConfig rc;
  rc.raw_config = cfg.raw();

  GenSpec& g = rc.gen;
  const std::string source = cfg.get("dataset", "source", "glyphs");
  if (source == "idx") {
    g.idx_images = cfg.get("dataset", "idx_images", "");
    g.idx_labels = cfg.get("dataset", "idx_labels", "");
    if (g.idx_images.empty() || g.idx_labels.empty())
      throw std::invalid_argument("config: idx source needs idx_images and idx_labels");
  } else if (source != "glyphs") {
    throw std::invalid_argument("config: dataset.source must be glyphs or idx");
  }
  g.train_count = static_cast<int>(cfg.get_long("dataset", "train_count", 5000));
  g.test_count = static_cast<int>(cfg.get_long("dataset", "test_count", 1000));
  g.seed = static_cast<uint64_t>(cfg.get_long("dataset", "seed", 1));
  g.grid.side_px = static_cast<int>(cfg.get_long("dataset", "grid_side", 32));
  g.grid.pitch_um = cfg.get_double("dataset", "pitch_um", 1.25);
  g.grid.wavelength_um = cfg.get_double("dataset", "wavelength_um", 0.5);
  g.na = cfg.get_double("dataset", "na", 0.175);
  g.led_pitch_sine = cfg.get_double("dataset", "led_pitch_sine", 0.12533);
  g.ring_sines = cfg.get_doubles("dataset", "ring_sines");
  for (double c : cfg.get_doubles("dataset", "ring_counts"))
    g.ring_counts.push_back(static_cast<int>(c));
  g.phase.refractive_index = cfg.get_double("dataset", "refractive_index", 1.2);
  g.phase.max_thickness_um = cfg.get_double("dataset", "max_thickness_um", 2.5);
  g.phase.wavelength_um = g.grid.wavelength_um;
  g.phase.absorption_alpha = cfg.get_double("dataset", "absorption_alpha", 0.01);
  const std::string conv = cfg.get("dataset", "amplitude_convention", "literal");
  if (conv == "literal") g.phase.amplitude_convention = AmplitudeConvention::kLiteral;
  else if (conv == "one_minus")
    g.phase.amplitude_convention = AmplitudeConvention::kOneMinus;
  else
    throw std::invalid_argument("config: amplitude_convention must be literal or one_minus");
  g.sensor.side_px = static_cast<int>(cfg.get_long("dataset", "sensor_side", 28));
  g.sensor.readout_sigma = cfg.get_double("dataset", "readout_sigma", 0.01);
  g.sensor.sample_sigma = cfg.get_double("dataset", "sample_sigma", 0.0);
  g.class_count = static_cast<int>(cfg.get_long("dataset", "classes", 10));

  TrainConfig& t = rc.train;
  t.iterations = cfg.get_long("train", "iterations", 10000);
  t.batch = static_cast<int>(cfg.get_long("train", "batch", 50));
  t.step_size = cfg.get_double("train", "step_size", 1e-4);
  const std::string opt = cfg.get("train", "optimizer", "adam");
  if (opt == "adam") t.optimizer = TrainConfig::Optimizer::kAdam;
  else if (opt == "sgd") t.optimizer = TrainConfig::Optimizer::kSgd;
  else throw std::invalid_argument("config: optimizer must be adam or sgd");
  t.dropout_keep = cfg.get_double("train", "dropout_keep", 0.5);
  t.seed = static_cast<uint64_t>(cfg.get_long("train", "seed", 1));
  t.deterministic = cfg.get_bool("train", "deterministic", false);

  rc.strategy = strategy_from_name(cfg.get("train", "strategy", "optimized"));

  if (cfg.has("sweep", "sigmas")) rc.sweep_sigmas = cfg.get_doubles("sweep", "sigmas");
  if (cfg.has("sweep", "strategies")) {
    rc.sweep_strategies.clear();
    std::istringstream ss(cfg.get("sweep", "strategies", ""));
    std::string item;
    while (std::getline(ss, item, ','))
      rc.sweep_strategies.push_back(strategy_from_name(trim(item)));
  }
  rc.trials = static_cast<int>(cfg.get_long("sweep", "trials", 5));
  rc.jobs = static_cast<int>(cfg.get_long("sweep", "jobs", 1));
  rc.out_dir = cfg.get("output", "dir", "runs");
  rc.data_dir = cfg.get("output", "dataset_dir", "data");
  return rc;
}

uint64_t config_hash(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace dpcnn
