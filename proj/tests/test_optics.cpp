#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "dpcnn/fft.hpp"
#include "dpcnn/optics.hpp"
#include "dpcnn/phase_object.hpp"
#include "dpcnn/selfcheck.hpp"

using namespace dpcnn;
using std::numbers::pi;

namespace {

const GridSpec kGrid32{32, 1.25, 0.5};

ThinObject uniform_object(const GridSpec& grid) {
  ThinObject obj;
  obj.grid = grid;
  obj.amplitude.assign(grid.samples(), 1.0);
  obj.phase.assign(grid.samples(), 0.0);
  return obj;
}

ThinObject random_object(const GridSpec& grid, uint64_t seed) {
  Rng rng(seed);
  ThinObject obj;
  obj.grid = grid;
  obj.amplitude.resize(grid.samples());
  obj.phase.resize(grid.samples());
  for (size_t i = 0; i < grid.samples(); ++i) {
    obj.amplitude[i] = rng.uniform();
    obj.phase[i] = rng.uniform(-pi, pi);
  }
  return obj;
}

}  // namespace

TEST_CASE("make_pupil passes every bin when the cutoff exceeds the grid") {
  const PupilMask p = make_pupil(kGrid32, 0.9999);
  size_t ones = 0;
  for (uint8_t m : p.mask) ones += m;
  CHECK(ones == 1024);
}

TEST_CASE("make_pupil degenerates to DC only for tiny na") {
  const PupilMask p = make_pupil(kGrid32, 1e-6);
  CHECK(p.mask[0] == 1);
  size_t ones = 0;
  for (uint8_t m : p.mask) ones += m;
  CHECK(ones == 1);
}

TEST_CASE("make_pupil bin count matches direct enumeration at na = 0.175") {
  const PupilMask p = make_pupil(kGrid32, 0.175);
  // oracle: enumerate all 1024 frequency samples
  const double cutoff = 0.175 / 0.5;
  size_t expected = 0;
  for (int ky = 0; ky < 32; ++ky)
    for (int kx = 0; kx < 32; ++kx) {
      const double fy = kGrid32.freq_of_bin(ky);
      const double fx = kGrid32.freq_of_bin(kx);
      if (fx * fx + fy * fy <= cutoff * cutoff) ++expected;
    }
  size_t ones = 0;
  for (uint8_t m : p.mask) ones += m;
  CHECK(ones == expected);
  CHECK(expected > 1);
  CHECK(expected < 1024);
}

TEST_CASE("make_pupil rejects bad arguments") {
  CHECK_THROWS_AS(make_pupil(kGrid32, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_pupil(kGrid32, 1.0), std::invalid_argument);
  GridSpec bad = kGrid32;
  bad.side_px = 1;
  CHECK_THROWS_AS(make_pupil(bad, 0.5), std::invalid_argument);
}

TEST_CASE("tilt_field is all ones on axis") {
  const ComplexField f = tilt_field(kGrid32, 0.0, 0.0);
  for (const cplx& v : f.values) {
    CHECK(v.real() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(v.imag() == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("tilt_field conjugate symmetry under sine negation") {
  const ComplexField a = tilt_field(kGrid32, 0.2, 0.0);
  const ComplexField b = tilt_field(kGrid32, -0.2, 0.0);
  for (size_t i = 0; i < a.values.size(); ++i)
    CHECK(std::abs(a.values[i] - std::conj(b.values[i])) < 1e-14);
}

TEST_CASE("tilt_field phase advance matches the pointwise formula") {
  const double s = std::sin(7.2 * pi / 180.0);
  const ComplexField f = tilt_field(kGrid32, s, 0.0);
  const double per_px = 2.0 * pi * s * 1.25 / 0.5;
  // direct evaluation at three pixels along x (y row fixed)
  const int y = 5;
  for (int x : {3, 17, 30}) {
    const cplx got = f.values[static_cast<size_t>(y) * 32 + x];
    const double expect = per_px * (x - 16);  // coordinates from grid center
    CHECK(std::abs(got - std::polar(1.0, expect)) < 1e-12);
    CHECK(std::abs(std::abs(got) - 1.0) < 1e-15);
  }
}

TEST_CASE("tilt_field rejects direction sines with norm >= 1") {
  CHECK_THROWS_AS(tilt_field(kGrid32, 0.8, 0.7), std::invalid_argument);
}

TEST_CASE("form_subimage: plane wave through a DC-passing pupil is constant 1") {
  const PupilMask pupil = make_pupil(kGrid32, 0.175);
  LedArray array;
  array.leds.push_back({0.0, 0.0, true, 0});
  const SensorSpec sensor{28, 0.0, 0.0};
  const Image img = form_subimage(uniform_object(kGrid32), 0, array, pupil, sensor);
  for (double v : img) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("form_subimage: dark-field LED nulls a uniform object") {
  const PupilMask pupil = make_pupil(kGrid32, 0.175);
  LedArray array;
  array.leds.push_back({0.25, 0.0, false, 2});
  const SensorSpec sensor{28, 0.0, 0.0};
  const Image img = form_subimage(uniform_object(kGrid32), 0, array, pupil, sensor);
  for (double v : img) CHECK(std::abs(v) < 1e-18);
}

TEST_CASE("form_subimage matches a direct spatial-domain circular convolution") {
  // on-axis: kernel is the plain coherent PSF (inverse DFT of the mask)
  GridSpec grid{8, 1.0, 0.5};
  const PupilMask pupil = make_pupil(grid, 0.4);
  LedArray array;
  array.leds.push_back({0.0, 0.0, true, 0});
  const ThinObject obj = random_object(grid, 321);
  const SensorSpec sensor{8, 0.0, 0.0};
  const Image fast = form_subimage(obj, 0, array, pupil, sensor);

  // oracle: explicit PSF + O(N^4) convolution, no FFT
  const int n = 8;
  std::vector<cplx> psf(64, 0.0);
  for (int ry = 0; ry < n; ++ry)
    for (int rx = 0; rx < n; ++rx) {
      cplx acc = 0.0;
      for (int ky = 0; ky < n; ++ky)
        for (int kx = 0; kx < n; ++kx) {
          if (!pupil.mask[static_cast<size_t>(ky) * n + kx]) continue;
          acc += std::polar(1.0, 2.0 * pi * (kx * rx + ky * ry) / n);
        }
      psf[static_cast<size_t>(ry) * n + rx] = acc / 64.0;
    }
  const ComplexField o = obj.transmittance();
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      cplx acc = 0.0;
      for (int sy = 0; sy < n; ++sy)
        for (int sx = 0; sx < n; ++sx)
          acc += o.values[static_cast<size_t>(sy) * n + sx] *
                 psf[static_cast<size_t>(((y - sy) % n + n) % n) * n +
                     ((x - sx) % n + n) % n];
      CHECK(fast[static_cast<size_t>(y) * n + x] ==
            doctest::Approx(std::norm(acc)).epsilon(1e-10));
    }
}

TEST_CASE("shifted-pupil path equals tilt-multiply path for grid-aligned tilts") {
  GridSpec grid{16, 1.0, 0.5};
  // shifted disk must stay inside the principal frequency range: the two
  // formulations agree exactly only when no spectral wrap is involved
  const PupilMask pupil = make_pupil(grid, 0.15);
  const ThinObject obj = random_object(grid, 77);
  const SensorSpec sensor{16, 0.0, 0.0};

  // tilt aligned with frequency bin 2: s = k * freq_step * lambda
  const double s = 2 * grid.freq_step() * grid.wavelength_um;
  LedArray array;
  array.leds.push_back({s, 0.0, true, 1});
  const Image got = form_subimage(obj, 0, array, pupil, sensor);

  // literal model: multiply by the sampled tilt ramp, then fixed pupil
  const ComplexField tilt = tilt_field(grid, s, 0.0);
  const ComplexField o = obj.transmittance();
  std::vector<cplx> field(o.values.size()), spec, out;
  for (size_t i = 0; i < field.size(); ++i) field[i] = o.values[i] * tilt.values[i];
  fft2(field, spec, grid.side_px);
  for (int ky = 0; ky < 16; ++ky)
    for (int kx = 0; kx < 16; ++kx)
      if (!pupil.mask[static_cast<size_t>(ky) * 16 + kx])
        spec[static_cast<size_t>(ky) * 16 + kx] = 0.0;
  ifft2(spec, out, grid.side_px);
  for (size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(std::norm(out[i])).epsilon(1e-10));
}

TEST_CASE("pixel_sample preserves constants at any sensor size") {
  Image img(32 * 32, 3.25);
  for (int out : {5, 16, 28, 31}) {
    const Image got = pixel_sample(img, 32, out);
    CHECK(got.size() == static_cast<size_t>(out) * out);
    for (double v : got) CHECK(v == doctest::Approx(3.25).epsilon(1e-14));
  }
}

TEST_CASE("pixel_sample 32->16 is the exact 2x2 block mean") {
  Rng rng(5);
  Image img(32 * 32);
  for (double& v : img) v = rng.uniform();
  const Image got = pixel_sample(img, 32, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const double want = (img[(2 * y) * 32 + 2 * x] + img[(2 * y) * 32 + 2 * x + 1] +
                           img[(2 * y + 1) * 32 + 2 * x] +
                           img[(2 * y + 1) * 32 + 2 * x + 1]) /
                          4.0;
      CHECK(got[static_cast<size_t>(y) * 16 + x] == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("pixel_sample 32->28 corner pixel uses rectangle-overlap weights") {
  Rng rng(6);
  Image img(32 * 32);
  for (double& v : img) v = rng.uniform();
  const Image got = pixel_sample(img, 32, 28);
  // detector pixel (0,0) covers [0, 8/7)^2: weights {1, 1/7, 1/7, 1/49}*(49/64)
  const double want =
      (img[0] * 1.0 + img[1] * (1.0 / 7.0) + img[32] * (1.0 / 7.0) +
       img[33] * (1.0 / 49.0)) *
      (49.0 / 64.0);
  CHECK(got[0] == doctest::Approx(want).epsilon(1e-12));
  // full-grid agreement with the brute-force geometric oracle
  const Image oracle = oracle_pixel_sample(img, 32, 28);
  for (size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
}

TEST_CASE("pixel_sample preserves the global mean on random shapes") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int in = 4 + static_cast<int>(rng.below(60));
    const int out = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(in)));
    Image img(static_cast<size_t>(in) * in);
    double mean_in = 0.0;
    for (double& v : img) {
      v = rng.uniform();
      mean_in += v;
    }
    mean_in /= static_cast<double>(img.size());
    const Image got = pixel_sample(img, in, out);
    double mean_out = 0.0;
    for (double v : got) mean_out += v;
    mean_out /= static_cast<double>(got.size());
    CHECK(mean_out == doctest::Approx(mean_in).epsilon(1e-12));
  }
}

TEST_CASE("pixel_sample rejects expanding the grid") {
  CHECK_THROWS_AS(pixel_sample(Image(16, 0.0), 4, 5), std::invalid_argument);
}

TEST_CASE("add_noise with zero sigmas is the identity") {
  Rng rng(1);
  Image img(28 * 28, 0.5);
  const Image before = img;
  add_noise(img, SensorSpec{28, 0.0, 0.0}, 1.0, rng);
  CHECK(img == before);
}

TEST_CASE("add_noise is deterministic for a fixed stream") {
  Image a(28 * 28, 0.5), b(28 * 28, 0.5);
  const SensorSpec sensor{28, 0.01, 0.02};
  {
    Rng rng = make_stream(42, StreamTag::kRenderNoise, 3, 4);
    add_noise(a, sensor, 2.0, rng);
  }
  {
    Rng rng = make_stream(42, StreamTag::kRenderNoise, 3, 4);
    add_noise(b, sensor, 2.0, rng);
  }
  CHECK(a == b);
}

TEST_CASE("add_noise empirical standard deviation matches the configured scale") {
  const int side = 1000;  // 10^6 samples
  Image img(static_cast<size_t>(side) * side, 0.0);
  Rng rng(99);
  add_noise(img, SensorSpec{side, 0.01, 0.0}, 1.0, rng);
  double mean = 0.0;
  for (double v : img) mean += v;
  mean /= static_cast<double>(img.size());
  double var = 0.0;
  for (double v : img) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(img.size() - 1));
  CHECK(sd >= 0.0099);
  CHECK(sd <= 0.0101);
}

TEST_CASE("make_led_grid_5x5 hits the published illumination angles") {
  const double p = std::sin(7.2 * pi / 180.0);
  const LedArray arr = make_led_grid_5x5(p, 0.175);
  REQUIRE(arr.size() == 25);
  // center LED at index 12, bright for any positive na
  CHECK(arr.leds[12].sx == 0.0);
  CHECK(arr.leds[12].sy == 0.0);
  CHECK(arr.leds[12].bright_field);
  CHECK(arr.leds[12].ring_index == 0);
  // first and second axial rings at 7.2 and ~14.5 degrees
  for (const Led& led : arr.leds) {
    const double norm = std::hypot(led.sx, led.sy);
    if (led.ring_index == 1 && (led.sx == 0.0 || led.sy == 0.0))
      CHECK(std::asin(norm) * 180.0 / pi == doctest::Approx(7.2).epsilon(1e-9));
    if (led.ring_index == 2 && (led.sx == 0.0 || led.sy == 0.0))
      CHECK(std::asin(norm) * 180.0 / pi == doctest::Approx(14.5).epsilon(2e-3));
  }
}

TEST_CASE("make_led_grid_5x5 bright/dark flags match direct norm comparison") {
  const double p = std::sin(7.2 * pi / 180.0);
  const double na = 0.175;
  const LedArray arr = make_led_grid_5x5(p, na);
  int bright = 0;
  for (const Led& led : arr.leds) {
    CHECK(led.bright_field == (std::hypot(led.sx, led.sy) <= na));
    bright += led.bright_field ? 1 : 0;
  }
  // first-ring diagonal (p*sqrt(2) ~ 0.17724) already exceeds the aperture
  CHECK(bright == 5);
  const double diag = std::hypot(p, p);
  CHECK(diag > na);
}

TEST_CASE("make_led_rings places degenerate and quarter-symmetric rings") {
  const LedArray solo = make_led_rings({0.0}, {1}, 0.5);
  REQUIRE(solo.size() == 1);
  CHECK(solo.leds[0].sx == 0.0);
  CHECK(solo.leds[0].sy == 0.0);
  CHECK(solo.leds[0].bright_field);

  const LedArray quad = make_led_rings({0.3}, {4}, 0.5);
  REQUIRE(quad.size() == 4);
  CHECK(quad.leds[0].sx == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(std::abs(quad.leds[0].sy) < 1e-15);
  CHECK(quad.leds[1].sy == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(std::abs(quad.leds[1].sx) < 1e-15);
  CHECK(quad.leds[2].sx == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(quad.leds[3].sy == doctest::Approx(-0.3).epsilon(1e-12));
}

TEST_CASE("make_led_rings 29-LED configuration flags the outer ring dark") {
  const LedArray arr = make_led_rings({0.1, 0.3, 0.5, 0.7}, {1, 8, 8, 12}, 0.5);
  REQUIRE(arr.size() == 29);
  int dark = 0;
  for (const Led& led : arr.leds) {
    CHECK(led.bright_field == (std::hypot(led.sx, led.sy) <= 0.5));
    if (!led.bright_field) ++dark;
  }
  CHECK(dark == 12);
  CHECK_THROWS_AS(make_led_rings({0.1, 0.2}, {4}, 0.5), std::invalid_argument);
}

TEST_CASE("parseval: all-pass round trip conserves mean energy") {
  Rng rng(11);
  for (int n : {8, 15, 16, 27, 32}) {
    std::vector<cplx> f(static_cast<size_t>(n) * n), F, back;
    double mean_in = 0.0;
    for (cplx& v : f) {
      v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      mean_in += std::norm(v);
    }
    mean_in /= static_cast<double>(f.size());
    fft2(f, F, n);
    ifft2(F, back, n);
    double mean_out = 0.0;
    for (const cplx& v : back) mean_out += std::norm(v);
    mean_out /= static_cast<double>(back.size());
    CHECK(mean_out == doctest::Approx(mean_in).epsilon(1e-12));
  }
}

TEST_CASE("tilt-shift theorem holds exactly for grid-aligned tilts") {
  GridSpec grid{16, 1.0, 0.5};
  const ThinObject obj = random_object(grid, 13);
  const ComplexField o = obj.transmittance();
  std::vector<cplx> O;
  fft2(o.values, O, 16);
  for (int kbin : {2, 4, 6}) {  // even bins: the centered ramp is exactly a basis vector
    const double s = kbin * grid.freq_step() * grid.wavelength_um;
    const ComplexField tilt = tilt_field(grid, s, 0.0);
    std::vector<cplx> prod(o.values.size()), P;
    for (size_t i = 0; i < prod.size(); ++i) prod[i] = o.values[i] * tilt.values[i];
    fft2(prod, P, 16);
    for (int ky = 0; ky < 16; ++ky)
      for (int kx = 0; kx < 16; ++kx) {
        const cplx want = O[static_cast<size_t>(ky) * 16 + ((kx - kbin) % 16 + 16) % 16];
        CHECK(std::abs(P[static_cast<size_t>(ky) * 16 + kx] - want) < 1e-10 * 16);
      }
  }
}

TEST_CASE("dark-field null beyond one frequency-bin margin, and non-negativity") {
  const PupilMask pupil = make_pupil(kGrid32, 0.175);
  const double margin_sine = 0.175 + kGrid32.freq_step() * kGrid32.wavelength_um;
  LedArray array;
  array.leds.push_back({margin_sine * 1.05, 0.0, false, 2});
  array.leds.push_back({0.0, 0.0, true, 0});
  const SensorSpec sensor{28, 0.0, 0.0};
  const ThinObject uni = uniform_object(kGrid32);

  const Image bright = form_subimage(uni, 1, array, pupil, sensor);
  double bright_peak = 0.0;
  for (double v : bright) bright_peak = std::max(bright_peak, v);

  const Image dark = form_subimage(uni, 0, array, pupil, sensor);
  for (double v : dark) CHECK(std::abs(v) < 1e-9 * bright_peak);

  const ThinObject obj = random_object(kGrid32, 55);
  const Image img = form_subimage(obj, 0, array, pupil, sensor);
  for (double v : img) CHECK(v >= 0.0);
}

TEST_CASE("fft path equals the direct-convolution oracle on small grids") {
  Rng rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    GridSpec grid;
    grid.side_px = 6 + static_cast<int>(rng.below(11));  // up to 16
    grid.pitch_um = 1.0;
    grid.wavelength_um = 0.5;
    const PupilMask pupil = make_pupil(grid, rng.uniform(0.1, 0.9));
    LedArray array;
    array.leds.push_back({rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), true, 0});
    const ThinObject obj = random_object(grid, 1000 + trial);
    const SensorSpec sensor{grid.side_px, 0.0, 0.0};
    const Image fast = form_subimage(obj, 0, array, pupil, sensor);
    const Image slow = oracle_subimage_direct(obj, 0, array, pupil);
    double scale = 0.0;
    for (double v : slow) scale = std::max(scale, v);
    for (size_t i = 0; i < fast.size(); ++i)
      CHECK(std::abs(fast[i] - slow[i]) <= 1e-10 * std::max(scale, 1.0));
  }
}

TEST_CASE("form_subimage validates grids and indices") {
  const PupilMask pupil = make_pupil(kGrid32, 0.175);
  LedArray array;
  array.leds.push_back({0.0, 0.0, true, 0});
  GridSpec other{16, 1.25, 0.5};
  const ThinObject obj = uniform_object(other);
  const SensorSpec sensor{16, 0.0, 0.0};
  CHECK_THROWS_AS(form_subimage(obj, 0, array, pupil, sensor), std::invalid_argument);
  const ThinObject ok = uniform_object(kGrid32);
  CHECK_THROWS_AS(form_subimage(ok, 5, array, pupil, SensorSpec{28, 0.0, 0.0}),
                  std::invalid_argument);
}
