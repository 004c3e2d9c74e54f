// The discretized physical layer, baseline illumination patterns, joint and
// fixed-illumination training, evaluation, majority voting and learned
// pattern analysis.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dpcnn/cnn.hpp"
#include "dpcnn/dataset.hpp"
#include "dpcnn/tensor.hpp"

namespace dpcnn {

// ---------------------------------------------------------------------------
// Physical layer: detected image = sum_l w[l] * subimage[l]

// stack: [B][L][P], w: [L], out: [B][P]
template <class T>
void physical_layer_forward(const T* stack, int B, int L, int P, const T* w,
                            T* out) {
  for (int b = 0; b < B; ++b) {
    const T* s = stack + static_cast<size_t>(b) * L * P;
    T* o = out + static_cast<size_t>(b) * P;
    std::fill(o, o + P, T(0));
    for (int l = 0; l < L; ++l) {
      const T wl = w[l];
      const T* sl = s + static_cast<size_t>(l) * P;
      for (int p = 0; p < P; ++p) o[p] += wl * sl[p];
    }
  }
}

// dW[l] = <dOut_b, stack_{b,l}> summed over the batch; optional dStack.
template <class T>
void physical_layer_backward(const T* stack, int B, int L, int P, const T* w,
                             const T* dout, T* dw, T* dstack = nullptr) {
  std::fill(dw, dw + L, T(0));
  for (int b = 0; b < B; ++b) {
    const T* s = stack + static_cast<size_t>(b) * L * P;
    const T* g = dout + static_cast<size_t>(b) * P;
    for (int l = 0; l < L; ++l) {
      const T* sl = s + static_cast<size_t>(l) * P;
      T acc = T(0);
      for (int p = 0; p < P; ++p) acc += g[p] * sl[p];
      dw[l] += acc;
    }
    if (dstack) {
      T* ds = dstack + static_cast<size_t>(b) * L * P;
      for (int l = 0; l < L; ++l) {
        const T wl = w[l];
        T* dsl = ds + static_cast<size_t>(l) * P;
        for (int p = 0; p < P; ++p) dsl[p] = wl * g[p];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Baseline illumination patterns

enum class Strategy {
  kCenter,
  kAll,
  kOffAxis,
  kRandomSigned,
  kDpc,
  kOptimized,
};

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

// Fixed patterns for the non-learned strategies; kOptimized is invalid here.
std::vector<double> baseline_pattern(Strategy kind, const LedArray& array,
                                     Rng* rng = nullptr);

std::vector<double> canonicalize_sign(const std::vector<double>& w);

struct PatternStats {
  std::vector<double> ring_energy_fractions;  // indexed by ring_index
  double negative_energy_fraction = 0.0;
};

PatternStats pattern_stats(const std::vector<double>& w, const LedArray& array);

// K prediction sets over the same N examples -> per-example modal class,
// ties broken toward the lowest class index.
std::vector<int> majority_vote(const std::vector<std::vector<int>>& prediction_sets);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  long iterations = 10000;
  int batch = 50;
  double step_size = 1e-4;
  enum class Optimizer { kAdam, kSgd } optimizer = Optimizer::kAdam;
  double dropout_keep = 0.5;
  uint64_t seed = 1;
  bool deterministic = false;
  int threads = 0;  // 0 = library default

  void validate() const;
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<int> predictions;
  std::vector<std::vector<long>> confusion;  // [label][prediction]
};

struct TrialResult {
  std::vector<double> w;  // final illumination weights
  double test_accuracy = 0.0;
  std::vector<int> predictions;
  std::vector<std::vector<long>> confusion;
  std::vector<double> loss_trace;
};

// Aborts on non-finite loss (reports the iteration and batch identity).
struct TrainingDivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class T>
struct TrainedModel {
  std::unique_ptr<Cnn<T>> model;
  std::vector<T> w;
  TrialResult result;
};

// Algorithm: random signed w, then T joint optimizer steps on (w, theta).
template <class T = float>
TrainedModel<T> train_dpcnn(const Dataset& train, const Dataset& test,
                            const TrainConfig& cfg);

// Same loop with w held fixed; only the classifier parameters update.
template <class T = float>
TrainedModel<T> train_fixed(const Dataset& train, const Dataset& test,
                            const std::vector<double>& w_fixed,
                            const TrainConfig& cfg);

template <class T>
EvalResult evaluate(Cnn<T>& model, const std::vector<T>& w, const Dataset& test);

// ---------------------------------------------------------------------------
// Checkpoints ("DPCNNCK1"): little-endian float32 blocks with a CRC32.

void save_checkpoint(const std::string& path,
                     const std::vector<const Tensor<float>*>& tensors);
std::vector<Tensor<float>> load_checkpoint(const std::string& path);

// Convenience: serializes w plus the 8 classifier parameter tensors.
void save_trial_checkpoint(const std::string& path, const std::vector<float>& w,
                           Cnn<float>& model);

// ---------------------------------------------------------------------------
// Pattern export

// Writes <base>.csv (led,sx,sy,ring,bright_field,weight), <base>.pgm
// (|w| heat map positioned by direction sines, scale in a comment) and
// <base>_sign.pgm (0 = negative, 128 = zero, 255 = positive).
void export_pattern(const std::vector<double>& w, const LedArray& array,
                    const std::string& base_path);

// Parses back the weight column of an exported CSV.
std::vector<double> parse_pattern_csv(const std::string& csv_path);

}  // namespace dpcnn
