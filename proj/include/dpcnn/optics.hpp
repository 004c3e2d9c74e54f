// Coherent image formation: pupil construction, tilted plane-wave
// illumination, per-LED sub-image rendering, detector pixel sampling and
// noise injection.
#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "dpcnn/rng.hpp"

namespace dpcnn {

using cplx = std::complex<double>;

// Object-plane sampling grid. Frequency extent is 1/pitch cycles/um,
// frequency resolution 1/(side_px*pitch).
struct GridSpec {
  int side_px = 32;
  double pitch_um = 1.25;
  double wavelength_um = 0.5;

  void validate() const;
  size_t samples() const { return static_cast<size_t>(side_px) * side_px; }
  double freq_step() const { return 1.0 / (side_px * pitch_um); }
  // DFT bin index -> spatial frequency in cycles/um (DC at bin 0).
  double freq_of_bin(int i) const {
    const int k = (i < (side_px + 1) / 2) ? i : i - side_px;
    return k * freq_step();
  }
  // Spatial coordinate of sample i, measured from the grid center, in um.
  double coord_of_px(int i) const { return (i - side_px / 2) * pitch_um; }
  bool operator==(const GridSpec&) const = default;
};

struct ComplexField {
  GridSpec grid;
  std::vector<cplx> values;  // row-major, values[y * side + x]
};

// Binary circular low-pass indicator on the DFT frequency grid, centered at
// DC. The coherent PSF is its inverse DFT; convolution happens spectrally.
struct PupilMask {
  GridSpec grid;
  double na = 0.0;
  std::vector<uint8_t> mask;  // row-major over (fy, fx) bins

  bool contains(double fx, double fy) const;  // continuous-disk test
};

struct Led {
  double sx = 0.0, sy = 0.0;  // direction sines
  bool bright_field = false;
  int ring_index = 0;  // 0 = on-axis
};

struct LedArray {
  std::vector<Led> leds;
  size_t size() const { return leds.size(); }
};

// Detector geometry plus the two Gaussian noise scales, both expressed as
// fractions of the dataset's reference intensity.
struct SensorSpec {
  int side_px = 28;
  double readout_sigma = 0.0;
  double sample_sigma = 0.0;

  void validate() const;
};

// Thin transparent object o = amplitude .* exp(i*phase).
struct ThinObject {
  GridSpec grid;
  std::vector<double> amplitude;  // in [0, 1]
  std::vector<double> phase;      // radians
  int label = -1;

  ComplexField transmittance() const;
};

using Image = std::vector<double>;  // row-major real image

PupilMask make_pupil(const GridSpec& grid, double na);

ComplexField tilt_field(const GridSpec& grid, double sx, double sy);

// Area-weighted block average from the object grid onto the sensor grid.
// Preserves the global mean; fractional ratios use exact rectangle overlap.
Image pixel_sample(const Image& intensity, int in_side, int out_side);

// Adds the readout and sample-plane Gaussian terms, independent per pixel.
// No clamping: the result may go negative.
void add_noise(Image& image, const SensorSpec& sensor, double reference, Rng& rng);

// Renders the intensity image of `object` under LED `led_index`:
// spectrum windowed by the pupil disk shifted to the LED's illumination
// frequency, inverse transformed, squared, then sampled onto the sensor.
// Pass rng to add noise (reference scales both noise terms).
Image form_subimage(const ThinObject& object, size_t led_index,
                    const LedArray& array, const PupilMask& pupil,
                    const SensorSpec& sensor, Rng* rng = nullptr,
                    double reference = 1.0);

// 5x5 grid, uniform in direction-sine space with spacing `angular_pitch_sine`;
// ordering is row-major over (a, b) in {-2..2}^2 with index = (a+2)*5 + (b+2),
// led (a, b) at sines (a*p, b*p); center LED lands at index 12.
LedArray make_led_grid_5x5(double angular_pitch_sine, double na);

// Concentric rings at the given direction-sine radii, `counts[i]` LEDs per
// ring placed counterclockwise starting at angle 0.
LedArray make_led_rings(const std::vector<double>& ring_sines,
                        const std::vector<int>& counts, double na);

}  // namespace dpcnn
