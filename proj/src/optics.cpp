#include "dpcnn/optics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dpcnn/fft.hpp"

namespace dpcnn {

using std::numbers::pi;

void GridSpec::validate() const {
  if (side_px < 2) throw std::invalid_argument("GridSpec: side_px must be >= 2");
  if (!(pitch_um > 0.0)) throw std::invalid_argument("GridSpec: pitch must be positive");
  if (!(wavelength_um > 0.0))
    throw std::invalid_argument("GridSpec: wavelength must be positive");
}

void SensorSpec::validate() const {
  if (side_px < 1) throw std::invalid_argument("SensorSpec: side_px must be >= 1");
  if (readout_sigma < 0.0 || sample_sigma < 0.0)
    throw std::invalid_argument("SensorSpec: noise sigmas must be >= 0");
}

ComplexField ThinObject::transmittance() const {
  ComplexField f;
  f.grid = grid;
  f.values.resize(grid.samples());
  for (size_t i = 0; i < f.values.size(); ++i)
    f.values[i] = std::polar(amplitude[i], phase[i]);
  return f;
}

bool PupilMask::contains(double fx, double fy) const {
  const double cutoff = na / grid.wavelength_um;
  return fx * fx + fy * fy <= cutoff * cutoff;
}

PupilMask make_pupil(const GridSpec& grid, double na) {
  grid.validate();
  if (!(na > 0.0 && na < 1.0))
    throw std::invalid_argument("make_pupil: na must be in (0, 1)");
  PupilMask p;
  p.grid = grid;
  p.na = na;
  p.mask.assign(grid.samples(), 0);
  const int n = grid.side_px;
  for (int ky = 0; ky < n; ++ky) {
    const double fy = grid.freq_of_bin(ky);
    for (int kx = 0; kx < n; ++kx) {
      const double fx = grid.freq_of_bin(kx);
      p.mask[static_cast<size_t>(ky) * n + kx] = p.contains(fx, fy) ? 1 : 0;
    }
  }
  return p;
}

ComplexField tilt_field(const GridSpec& grid, double sx, double sy) {
  grid.validate();
  if (sx * sx + sy * sy >= 1.0)
    throw std::invalid_argument("tilt_field: direction-sine norm must be < 1");
  ComplexField f;
  f.grid = grid;
  f.values.resize(grid.samples());
  const int n = grid.side_px;
  const double k0 = 2.0 * pi / grid.wavelength_um;
  for (int y = 0; y < n; ++y) {
    const double yu = grid.coord_of_px(y);
    for (int x = 0; x < n; ++x) {
      const double xu = grid.coord_of_px(x);
      f.values[static_cast<size_t>(y) * n + x] =
          std::polar(1.0, k0 * (sx * xu + sy * yu));
    }
  }
  return f;
}

Image pixel_sample(const Image& intensity, int in_side, int out_side) {
  if (out_side > in_side)
    throw std::invalid_argument("pixel_sample: sensor grid exceeds object grid");
  if (intensity.size() != static_cast<size_t>(in_side) * in_side)
    throw std::invalid_argument("pixel_sample: image size mismatch");
  if (out_side == in_side) return intensity;

  // Separable 1D overlap weights: out cell i covers [i*r, (i+1)*r) input units.
  const double r = static_cast<double>(in_side) / out_side;
  std::vector<double> w(static_cast<size_t>(out_side) * in_side, 0.0);
  for (int i = 0; i < out_side; ++i) {
    const double lo = i * r, hi = (i + 1) * r;
    const int j0 = static_cast<int>(std::floor(lo));
    const int j1 = std::min(in_side - 1, static_cast<int>(std::ceil(hi)) - 1);
    for (int j = j0; j <= j1; ++j) {
      const double overlap =
          std::min(hi, static_cast<double>(j + 1)) - std::max(lo, static_cast<double>(j));
      if (overlap > 0.0) w[static_cast<size_t>(i) * in_side + j] = overlap;
    }
  }

  // rows then columns, normalized by the covered area r*r
  std::vector<double> tmp(static_cast<size_t>(in_side) * out_side, 0.0);
  for (int y = 0; y < in_side; ++y)
    for (int i = 0; i < out_side; ++i) {
      double acc = 0.0;
      const double* wr = &w[static_cast<size_t>(i) * in_side];
      const double* row = &intensity[static_cast<size_t>(y) * in_side];
      for (int j = 0; j < in_side; ++j) acc += wr[j] * row[j];
      tmp[static_cast<size_t>(y) * out_side + i] = acc;
    }
  Image out(static_cast<size_t>(out_side) * out_side, 0.0);
  const double inv_area = 1.0 / (r * r);
  for (int i = 0; i < out_side; ++i) {
    const double* wc = &w[static_cast<size_t>(i) * in_side];
    for (int x = 0; x < out_side; ++x) {
      double acc = 0.0;
      for (int y = 0; y < in_side; ++y) acc += wc[y] * tmp[static_cast<size_t>(y) * out_side + x];
      out[static_cast<size_t>(i) * out_side + x] = acc * inv_area;
    }
  }
  return out;
}

void add_noise(Image& image, const SensorSpec& sensor, double reference, Rng& rng) {
  sensor.validate();
  if (!(reference > 0.0))
    throw std::invalid_argument("add_noise: reference intensity must be positive");
  if (sensor.readout_sigma > 0.0) {
    const double s = sensor.readout_sigma * reference;
    for (double& v : image) v += rng.normal(0.0, s);
  }
  if (sensor.sample_sigma > 0.0) {
    const double s = sensor.sample_sigma * reference;
    for (double& v : image) v += rng.normal(0.0, s);
  }
}

Image form_subimage(const ThinObject& object, size_t led_index,
                    const LedArray& array, const PupilMask& pupil,
                    const SensorSpec& sensor, Rng* rng, double reference) {
  if (!(object.grid == pupil.grid))
    throw std::invalid_argument("form_subimage: object/pupil grid mismatch");
  if (led_index >= array.size())
    throw std::invalid_argument("form_subimage: led_index out of range");
  sensor.validate();
  if (sensor.side_px > object.grid.side_px)
    throw std::invalid_argument("form_subimage: sensor grid exceeds object grid");

  const int n = object.grid.side_px;
  const Led& led = array.leds[led_index];
  const double inv_lambda = 1.0 / object.grid.wavelength_um;

  ComplexField field = object.transmittance();
  std::vector<cplx> spectrum;
  fft2(field.values, spectrum, n);

  // Tilted illumination shifts the object spectrum; equivalently the pupil
  // window slides to the LED's illumination frequency. The disk test is
  // evaluated in continuous frequency so off-grid illumination angles behave
  // exactly (dark-field LEDs null the unscattered background).
  for (int ky = 0; ky < n; ++ky) {
    const double fy = object.grid.freq_of_bin(ky) + led.sy * inv_lambda;
    for (int kx = 0; kx < n; ++kx) {
      const double fx = object.grid.freq_of_bin(kx) + led.sx * inv_lambda;
      if (!pupil.contains(fx, fy)) spectrum[static_cast<size_t>(ky) * n + kx] = 0.0;
    }
  }

  std::vector<cplx> blurred;
  ifft2(spectrum, blurred, n);
  Image intensity(object.grid.samples());
  for (size_t i = 0; i < intensity.size(); ++i) intensity[i] = std::norm(blurred[i]);

  Image detected = pixel_sample(intensity, n, sensor.side_px);
  if (rng) add_noise(detected, sensor, reference, *rng);
  return detected;
}

LedArray make_led_grid_5x5(double angular_pitch_sine, double na) {
  if (!(angular_pitch_sine > 0.0) || !(2.0 * angular_pitch_sine < 1.0))
    throw std::invalid_argument("make_led_grid_5x5: pitch sine out of range");
  LedArray arr;
  arr.leds.reserve(25);
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b) {
      Led led;
      led.sx = a * angular_pitch_sine;
      led.sy = b * angular_pitch_sine;
      led.bright_field = std::hypot(led.sx, led.sy) <= na;
      led.ring_index = std::max(std::abs(a), std::abs(b));
      arr.leds.push_back(led);
    }
  return arr;
}

LedArray make_led_rings(const std::vector<double>& ring_sines,
                        const std::vector<int>& counts, double na) {
  if (ring_sines.size() != counts.size())
    throw std::invalid_argument("make_led_rings: ring_sines/counts length mismatch");
  LedArray arr;
  for (size_t r = 0; r < ring_sines.size(); ++r) {
    if (!(ring_sines[r] >= 0.0 && ring_sines[r] < 1.0))
      throw std::invalid_argument("make_led_rings: ring sine must be in [0, 1)");
    if (counts[r] < 1)
      throw std::invalid_argument("make_led_rings: ring count must be positive");
    for (int i = 0; i < counts[r]; ++i) {
      const double angle = 2.0 * pi * i / counts[r];
      Led led;
      led.sx = ring_sines[r] * std::cos(angle);
      led.sy = ring_sines[r] * std::sin(angle);
      led.bright_field = std::hypot(led.sx, led.sy) <= na;
      led.ring_index = static_cast<int>(r);
      arr.leds.push_back(led);
    }
  }
  return arr;
}

}  // namespace dpcnn
