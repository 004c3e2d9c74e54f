// Per-object sub-image stacks, dataset assembly and the binary container.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpcnn/glyphs.hpp"
#include "dpcnn/optics.hpp"
#include "dpcnn/phase_object.hpp"

namespace dpcnn {

// The L per-LED detector images of one object.
struct SubImageStack {
  int led_count = 0, height = 0, width = 0;
  std::vector<float> images;  // [L][H][W]
  int label = -1;
  uint64_t object_id = 0;  // provenance: object index within the generation run
  uint64_t seed = 0;       // provenance: global seed used at render time

  const float* image(int led) const {
    return images.data() + static_cast<size_t>(led) * height * width;
  }
  float* image(int led) {
    return images.data() + static_cast<size_t>(led) * height * width;
  }
};

struct DatasetHeader {
  uint32_t version = 1;
  uint32_t led_count = 0, height = 0, width = 0;
  uint32_t example_count = 0;
  uint32_t class_count = 10;
  float noise_reference = 1.0f;
  float readout_sigma = 0.0f, sample_sigma = 0.0f;
  uint64_t global_seed = 0;
  uint32_t amplitude_convention = 0;
  float refractive_index = 0.0f, max_thickness_um = 0.0f;
  float wavelength_um = 0.0f, absorption_alpha = 0.0f;
  uint32_t grid_side = 0;
  float grid_pitch_um = 0.0f;
  float na = 0.0f;
  std::vector<Led> leds;
};

struct Dataset {
  DatasetHeader header;
  std::vector<SubImageStack> examples;

  LedArray led_array() const;
};

// Renders the full per-LED stack of one object. Noise streams are keyed by
// (seed, object_id, led), so results do not depend on render order.
SubImageStack render_stack(const ThinObject& object, uint64_t object_id,
                           const LedArray& array, const PupilMask& pupil,
                           const SensorSpec& sensor, double reference,
                           uint64_t seed, bool with_noise);

// Deterministic Fisher-Yates split of [0, count) into train/test index sets.
void split_shuffle(size_t count, double train_fraction, uint64_t seed,
                   std::vector<size_t>& train_idx, std::vector<size_t>& test_idx);

// ---------------------------------------------------------------------------
// Dataset generation

struct GenSpec {
  // digit source: built-in glyphs unless an IDX image/label pair is given
  std::string idx_images, idx_labels;
  int train_count = 5000, test_count = 1000;
  uint64_t seed = 1;
  GridSpec grid;                       // 32 px at 1.25 um, lambda 0.5 um
  PhaseObjectParams phase;             // n=1.2, t=2.5 um, alpha=0.01
  double na = 0.175;
  double led_pitch_sine = 0.12533;     // sin(7.2 deg)
  // when ring_sines is non-empty, a ring array replaces the 5x5 grid
  std::vector<double> ring_sines;
  std::vector<int> ring_counts;
  SensorSpec sensor{28, 0.01, 0.0};    // 1% readout noise
  int class_count = 10;
  GlyphJitter jitter;
  int calibration_objects = 100;
};

struct GeneratedData {
  Dataset train, test;
};

LedArray make_array(const GenSpec& spec);

// Builds objects from the configured source, splits, calibrates the noise
// reference on the first train objects, renders both sets.
GeneratedData generate_dataset(const GenSpec& spec);

// ---------------------------------------------------------------------------
// Binary container ("DPCNNDS1"), little-endian, CRC32-protected payload.

void save_dataset(const std::string& path, const Dataset& dataset);
Dataset load_dataset(const std::string& path);

}  // namespace dpcnn
