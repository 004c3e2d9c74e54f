#include "dpcnn/dataset.hpp"

#include <omp.h>

#include <cmath>
#include <stdexcept>

#include "dpcnn/idx.hpp"

namespace dpcnn {

LedArray Dataset::led_array() const {
  LedArray arr;
  arr.leds = header.leds;
  return arr;
}

SubImageStack render_stack(const ThinObject& object, uint64_t object_id,
                           const LedArray& array, const PupilMask& pupil,
                           const SensorSpec& sensor, double reference,
                           uint64_t seed, bool with_noise) {
  if (array.size() == 0) throw std::invalid_argument("render_stack: empty LED array");
  SubImageStack stack;
  stack.led_count = static_cast<int>(array.size());
  stack.height = sensor.side_px;
  stack.width = sensor.side_px;
  stack.label = object.label;
  stack.object_id = object_id;
  stack.seed = seed;
  stack.images.resize(static_cast<size_t>(stack.led_count) * sensor.side_px *
                      sensor.side_px);
  for (size_t l = 0; l < array.size(); ++l) {
    Image img;
    if (with_noise && (sensor.readout_sigma > 0.0 || sensor.sample_sigma > 0.0)) {
      Rng rng = make_stream(seed, StreamTag::kRenderNoise, object_id, l);
      img = form_subimage(object, l, array, pupil, sensor, &rng, reference);
    } else {
      img = form_subimage(object, l, array, pupil, sensor, nullptr, reference);
    }
    float* dst = stack.image(static_cast<int>(l));
    for (size_t i = 0; i < img.size(); ++i) dst[i] = static_cast<float>(img[i]);
  }
  return stack;
}

void split_shuffle(size_t count, double train_fraction, uint64_t seed,
                   std::vector<size_t>& train_idx, std::vector<size_t>& test_idx) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split_shuffle: train_fraction must be in (0, 1)");
  std::vector<size_t> perm(count);
  for (size_t i = 0; i < count; ++i) perm[i] = i;
  Rng rng = make_stream(seed, StreamTag::kSplit);
  for (size_t i = count; i > 1; --i) {
    const size_t j = rng.below(i);
    std::swap(perm[i - 1], perm[j]);
  }
  const size_t n_train = static_cast<size_t>(std::llround(train_fraction * count));
  if (n_train == 0 || n_train == count)
    throw std::invalid_argument("split_shuffle: a split would be empty");
  train_idx.assign(perm.begin(), perm.begin() + n_train);
  test_idx.assign(perm.begin() + n_train, perm.end());
}

LedArray make_array(const GenSpec& spec) {
  if (!spec.ring_sines.empty())
    return make_led_rings(spec.ring_sines, spec.ring_counts, spec.na);
  return make_led_grid_5x5(spec.led_pitch_sine, spec.na);
}

namespace {

struct SourceDigits {
  std::vector<std::vector<double>> images;  // 28x28 grayscale
  std::vector<int> labels;
  int h = 28, w = 28;
};

SourceDigits make_source(const GenSpec& spec, size_t total) {
  SourceDigits src;
  if (!spec.idx_images.empty()) {
    IdxImages idx = load_idx_images(spec.idx_images);
    std::vector<int> labels = load_idx_labels(spec.idx_labels);
    if (static_cast<size_t>(idx.count) != labels.size())
      throw std::invalid_argument("gen: image/label counts differ");
    if (static_cast<size_t>(idx.count) < total)
      throw std::invalid_argument("gen: IDX source smaller than requested dataset");
    src.h = idx.h;
    src.w = idx.w;
    // seeded subset of the corpus
    std::vector<size_t> pick, rest;
    if (static_cast<size_t>(idx.count) == total) {
      pick.resize(total);
      for (size_t i = 0; i < total; ++i) pick[i] = i;
    } else {
      split_shuffle(idx.count, static_cast<double>(total) / idx.count,
                    spec.seed ^ 0x9d1cull, pick, rest);
    }
    for (size_t i : pick) {
      src.images.emplace_back(idx.pixels.begin() + static_cast<long>(i) * idx.h * idx.w,
                              idx.pixels.begin() + static_cast<long>(i + 1) * idx.h * idx.w);
      src.labels.push_back(labels[i]);
    }
  } else {
    src.images.reserve(total);
    for (size_t i = 0; i < total; ++i) {
      const int digit = static_cast<int>(i % 10);
      Rng rng = make_stream(spec.seed, StreamTag::kGlyph, i);
      src.images.push_back(render_glyph(digit, rng, spec.jitter));
      src.labels.push_back(digit);
    }
  }
  return src;
}

DatasetHeader make_header(const GenSpec& spec, const LedArray& array,
                          double reference, uint32_t example_count) {
  DatasetHeader h;
  h.led_count = static_cast<uint32_t>(array.size());
  h.height = static_cast<uint32_t>(spec.sensor.side_px);
  h.width = static_cast<uint32_t>(spec.sensor.side_px);
  h.example_count = example_count;
  h.class_count = static_cast<uint32_t>(spec.class_count);
  h.noise_reference = static_cast<float>(reference);
  h.readout_sigma = static_cast<float>(spec.sensor.readout_sigma);
  h.sample_sigma = static_cast<float>(spec.sensor.sample_sigma);
  h.global_seed = spec.seed;
  h.amplitude_convention = static_cast<uint32_t>(spec.phase.amplitude_convention);
  h.refractive_index = static_cast<float>(spec.phase.refractive_index);
  h.max_thickness_um = static_cast<float>(spec.phase.max_thickness_um);
  h.wavelength_um = static_cast<float>(spec.phase.wavelength_um);
  h.absorption_alpha = static_cast<float>(spec.phase.absorption_alpha);
  h.grid_side = static_cast<uint32_t>(spec.grid.side_px);
  h.grid_pitch_um = static_cast<float>(spec.grid.pitch_um);
  h.na = static_cast<float>(spec.na);
  h.leds = array.leds;
  return h;
}

}  // namespace

GeneratedData generate_dataset(const GenSpec& spec) {
  spec.grid.validate();
  spec.phase.validate();
  spec.sensor.validate();
  if (spec.grid.wavelength_um != spec.phase.wavelength_um)
    throw std::invalid_argument("gen: grid and phase wavelengths differ");
  if (spec.train_count < 1 || spec.test_count < 1)
    throw std::invalid_argument("gen: counts must be positive");

  const size_t total = static_cast<size_t>(spec.train_count) + spec.test_count;
  const LedArray array = make_array(spec);
  const PupilMask pupil = make_pupil(spec.grid, spec.na);
  const SourceDigits src = make_source(spec, total);

  std::vector<ThinObject> objects(total);
  for (size_t i = 0; i < total; ++i) {
    objects[i] = digit_to_phase_object(src.images[i], src.h, src.w, spec.phase,
                                       spec.grid, src.labels[i]);
  }

  std::vector<size_t> train_idx, test_idx;
  split_shuffle(total, static_cast<double>(spec.train_count) / total, spec.seed,
                train_idx, test_idx);
  // llround can land one off the requested counts; trim deterministically
  train_idx.resize(std::min(train_idx.size(), static_cast<size_t>(spec.train_count)));
  test_idx.resize(std::min(test_idx.size(), static_cast<size_t>(spec.test_count)));

  // Noise reference: mean pixel intensity of the all-LEDs-on (unit weight)
  // image over a noiseless calibration batch of leading train objects.
  const SensorSpec clean{spec.sensor.side_px, 0.0, 0.0};
  const size_t n_cal = std::min(static_cast<size_t>(spec.calibration_objects),
                                train_idx.size());
  double reference = 0.0;
  #pragma omp parallel for reduction(+ : reference) schedule(dynamic)
  for (size_t c = 0; c < n_cal; ++c) {
    const SubImageStack s = render_stack(objects[train_idx[c]], train_idx[c], array,
                                         pupil, clean, 1.0, spec.seed, false);
    double acc = 0.0;
    for (float v : s.images) acc += v;
    reference += acc / (static_cast<double>(s.height) * s.width);
  }
  reference /= static_cast<double>(n_cal);
  if (!(reference > 0.0)) reference = 1.0;

  GeneratedData out;
  out.train.header = make_header(spec, array, reference,
                                 static_cast<uint32_t>(train_idx.size()));
  out.test.header = make_header(spec, array, reference,
                                static_cast<uint32_t>(test_idx.size()));
  out.train.examples.resize(train_idx.size());
  out.test.examples.resize(test_idx.size());

  #pragma omp parallel for schedule(dynamic)
  for (size_t i = 0; i < train_idx.size(); ++i)
    out.train.examples[i] = render_stack(objects[train_idx[i]], train_idx[i], array,
                                         pupil, spec.sensor, reference, spec.seed, true);
  #pragma omp parallel for schedule(dynamic)
  for (size_t i = 0; i < test_idx.size(); ++i)
    out.test.examples[i] = render_stack(objects[test_idx[i]], test_idx[i], array,
                                        pupil, spec.sensor, reference, spec.seed, true);
  return out;
}

}  // namespace dpcnn
