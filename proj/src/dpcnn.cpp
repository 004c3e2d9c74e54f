#include "dpcnn/dpcnn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpcnn {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kCenter: return "center";
    case Strategy::kAll: return "all";
    case Strategy::kOffAxis: return "off_axis";
    case Strategy::kRandomSigned: return "random_signed";
    case Strategy::kDpc: return "dpc";
    case Strategy::kOptimized: return "optimized";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  for (Strategy s : {Strategy::kCenter, Strategy::kAll, Strategy::kOffAxis,
                     Strategy::kRandomSigned, Strategy::kDpc, Strategy::kOptimized})
    if (name == strategy_name(s)) return s;
  throw std::invalid_argument("unknown strategy: " + name);
}

void TrainConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("TrainConfig: iterations must be >= 1");
  if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be >= 1");
  if (!(step_size > 0.0)) throw std::invalid_argument("TrainConfig: step size must be > 0");
  if (!(dropout_keep > 0.0 && dropout_keep <= 1.0))
    throw std::invalid_argument("TrainConfig: dropout keep-prob must be in (0, 1]");
}

std::vector<double> baseline_pattern(Strategy kind, const LedArray& array,
                                     Rng* rng) {
  const size_t L = array.size();
  if (L == 0) throw std::invalid_argument("baseline_pattern: empty LED array");
  std::vector<double> w(L, 0.0);
  switch (kind) {
    case Strategy::kCenter: {
      for (size_t l = 0; l < L; ++l)
        if (array.leds[l].sx == 0.0 && array.leds[l].sy == 0.0) {
          w[l] = 1.0;
          return w;
        }
      throw std::invalid_argument("baseline_pattern: array has no on-axis LED");
    }
    case Strategy::kAll: {
      std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(L));
      return w;
    }
    case Strategy::kOffAxis: {
      // first-ring bright-field LED on the +x axis
      for (size_t l = 0; l < L; ++l) {
        const Led& led = array.leds[l];
        if (led.ring_index == 1 && led.bright_field && led.sx > 0.0 && led.sy == 0.0) {
          w[l] = 1.0;
          return w;
        }
      }
      throw std::invalid_argument(
          "baseline_pattern: no bright-field first-ring LED at (+p, 0)");
    }
    case Strategy::kRandomSigned: {
      if (!rng) throw std::invalid_argument("baseline_pattern: random_signed needs an rng");
      for (double& v : w) v = rng->uniform(-1.0, 1.0);
      return w;
    }
    case Strategy::kDpc: {
      size_t n_pos = 0, n_neg = 0;
      for (const Led& led : array.leds) {
        if (led.sx > 0.0) ++n_pos;
        if (led.sx < 0.0) ++n_neg;
      }
      if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("baseline_pattern: dpc needs LEDs on both half planes");
      for (size_t l = 0; l < L; ++l) {
        if (array.leds[l].sx > 0.0) w[l] = 1.0 / static_cast<double>(n_pos);
        else if (array.leds[l].sx < 0.0) w[l] = -1.0 / static_cast<double>(n_neg);
      }
      return w;
    }
    case Strategy::kOptimized:
      throw std::invalid_argument("baseline_pattern: optimized is learned, not fixed");
  }
  throw std::invalid_argument("baseline_pattern: bad strategy");
}

std::vector<double> canonicalize_sign(const std::vector<double>& w) {
  if (w.empty()) throw std::invalid_argument("canonicalize_sign: empty vector");
  size_t arg = 0;
  double best = -1.0;
  for (size_t i = 0; i < w.size(); ++i)
    if (std::abs(w[i]) > best) {
      best = std::abs(w[i]);
      arg = i;
    }
  if (best == 0.0) throw std::invalid_argument("canonicalize_sign: all-zero vector");
  if (w[arg] > 0.0) return w;
  std::vector<double> flipped(w.size());
  for (size_t i = 0; i < w.size(); ++i) flipped[i] = -w[i];
  return flipped;
}

PatternStats pattern_stats(const std::vector<double>& w, const LedArray& array) {
  if (w.size() != array.size())
    throw std::invalid_argument("pattern_stats: weight/LED count mismatch");
  double total = 0.0, negative = 0.0;
  int max_ring = 0;
  for (const Led& led : array.leds) max_ring = std::max(max_ring, led.ring_index);
  PatternStats stats;
  stats.ring_energy_fractions.assign(static_cast<size_t>(max_ring) + 1, 0.0);
  for (size_t l = 0; l < w.size(); ++l) {
    const double e = w[l] * w[l];
    total += e;
    if (w[l] < 0.0) negative += e;
    stats.ring_energy_fractions[static_cast<size_t>(array.leds[l].ring_index)] += e;
  }
  if (total == 0.0) throw std::invalid_argument("pattern_stats: zero weight vector");
  for (double& f : stats.ring_energy_fractions) f /= total;
  stats.negative_energy_fraction = negative / total;
  return stats;
}

std::vector<int> majority_vote(const std::vector<std::vector<int>>& prediction_sets) {
  if (prediction_sets.empty())
    throw std::invalid_argument("majority_vote: no prediction sets");
  const size_t n = prediction_sets[0].size();
  for (const auto& set : prediction_sets)
    if (set.size() != n)
      throw std::invalid_argument("majority_vote: inconsistent set sizes");
  std::vector<int> out(n);
  for (size_t i = 0; i < n; ++i) {
    int max_class = 0;
    for (const auto& set : prediction_sets) max_class = std::max(max_class, set[i]);
    std::vector<int> counts(static_cast<size_t>(max_class) + 1, 0);
    for (const auto& set : prediction_sets) {
      if (set[i] < 0) throw std::invalid_argument("majority_vote: negative class index");
      counts[static_cast<size_t>(set[i])]++;
    }
    int best = 0;
    for (int c = 1; c <= max_class; ++c)
      if (counts[static_cast<size_t>(c)] > counts[static_cast<size_t>(best)]) best = c;
    out[i] = best;  // ties keep the lowest class index
  }
  return out;
}

}  // namespace dpcnn
