#include "dpcnn/selfcheck.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "dpcnn/dataset.hpp"
#include "dpcnn/dpcnn.hpp"
#include "dpcnn/fft.hpp"
#include "dpcnn/phase_object.hpp"

namespace dpcnn {

using std::numbers::pi;

Image oracle_subimage_direct(const ThinObject& object, size_t led_index,
                             const LedArray& array, const PupilMask& pupil) {
  const int n = object.grid.side_px;
  const Led& led = array.leds.at(led_index);
  const double inv_lambda = 1.0 / object.grid.wavelength_um;

  // shifted-pupil PSF by explicit inverse-DFT summation
  std::vector<cplx> psf(object.grid.samples(), 0.0);
  for (int ry = 0; ry < n; ++ry)
    for (int rx = 0; rx < n; ++rx) {
      cplx acc = 0.0;
      for (int ky = 0; ky < n; ++ky) {
        const double fy = object.grid.freq_of_bin(ky) + led.sy * inv_lambda;
        for (int kx = 0; kx < n; ++kx) {
          const double fx = object.grid.freq_of_bin(kx) + led.sx * inv_lambda;
          if (!pupil.contains(fx, fy)) continue;
          const double ph = 2.0 * pi * (static_cast<double>(kx) * rx +
                                        static_cast<double>(ky) * ry) / n;
          acc += std::polar(1.0, ph);
        }
      }
      psf[static_cast<size_t>(ry) * n + rx] = acc / static_cast<double>(n * n);
    }

  // direct circular convolution of the transmittance with the PSF
  const ComplexField o = object.transmittance();
  Image out(object.grid.samples(), 0.0);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      cplx acc = 0.0;
      for (int sy = 0; sy < n; ++sy)
        for (int sx = 0; sx < n; ++sx) {
          const int dy = ((y - sy) % n + n) % n;
          const int dx = ((x - sx) % n + n) % n;
          acc += o.values[static_cast<size_t>(sy) * n + sx] *
                 psf[static_cast<size_t>(dy) * n + dx];
        }
      out[static_cast<size_t>(y) * n + x] = std::norm(acc);
    }
  return out;
}

Image oracle_pixel_sample(const Image& intensity, int in_side, int out_side) {
  Image out(static_cast<size_t>(out_side) * out_side, 0.0);
  const double r = static_cast<double>(in_side) / out_side;
  for (int oy = 0; oy < out_side; ++oy)
    for (int ox = 0; ox < out_side; ++ox) {
      double acc = 0.0;
      for (int iy = 0; iy < in_side; ++iy)
        for (int ix = 0; ix < in_side; ++ix) {
          const double wy = std::max(
              0.0, std::min((oy + 1) * r, static_cast<double>(iy + 1)) -
                       std::max(oy * r, static_cast<double>(iy)));
          const double wx = std::max(
              0.0, std::min((ox + 1) * r, static_cast<double>(ix + 1)) -
                       std::max(ox * r, static_cast<double>(ix)));
          acc += wy * wx * intensity[static_cast<size_t>(iy) * in_side + ix];
        }
      out[static_cast<size_t>(oy) * out_side + ox] = acc / (r * r);
    }
  return out;
}

namespace {

ThinObject random_object(const GridSpec& grid, Rng& rng) {
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

bool check_pupil_symmetry(std::string& detail, bool corrupt) {
  const GridSpec grid{32, 1.25, 0.5};
  PupilMask p = make_pupil(grid, 0.175);
  if (corrupt) p.mask[5 * 32 + 3] ^= 1;  // test hook: break one off-center bin
  const int n = grid.side_px;
  for (int ky = 0; ky < n; ++ky)
    for (int kx = 0; kx < n; ++kx) {
      const int my = (n - ky) % n, mx = (n - kx) % n;
      if (p.mask[static_cast<size_t>(ky) * n + kx] !=
          p.mask[static_cast<size_t>(my) * n + mx]) {
        detail = "mask asymmetric at bin (" + std::to_string(kx) + "," +
                 std::to_string(ky) + ")";
        return false;
      }
    }
  return true;
}

bool check_parseval(std::string& detail) {
  Rng rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 8 + static_cast<int>(rng.below(25));
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
    if (std::abs(mean_out - mean_in) > 1e-12 * mean_in) {
      detail = "round-trip energy drift at n=" + std::to_string(n);
      return false;
    }
  }
  return true;
}

bool check_tilt_shift(std::string& detail) {
  const GridSpec grid{16, 1.0, 0.5};
  Rng rng(77);
  ThinObject obj = random_object(grid, rng);
  const ComplexField o = obj.transmittance();
  std::vector<cplx> O;
  fft2(o.values, O, grid.side_px);
  // tilt aligned with an even frequency bin: exact circular shift
  for (int kbin : {2, 4}) {
    const double s = kbin * grid.freq_step() * grid.wavelength_um;
    const ComplexField tilt = tilt_field(grid, s, 0.0);
    std::vector<cplx> prod(o.values.size()), P;
    for (size_t i = 0; i < prod.size(); ++i) prod[i] = o.values[i] * tilt.values[i];
    fft2(prod, P, grid.side_px);
    const int n = grid.side_px;
    for (int ky = 0; ky < n; ++ky)
      for (int kx = 0; kx < n; ++kx) {
        const cplx expect = O[static_cast<size_t>(ky) * n + ((kx - kbin) % n + n) % n];
        const cplx got = P[static_cast<size_t>(ky) * n + kx];
        if (std::abs(got - expect) > 1e-10 * static_cast<double>(n)) {
          detail = "shift mismatch at bin " + std::to_string(kbin);
          return false;
        }
      }
  }
  return true;
}

bool check_darkfield_null(std::string& detail) {
  const GridSpec grid{32, 1.25, 0.5};
  const double na = 0.175;
  const PupilMask pupil = make_pupil(grid, na);
  const LedArray array = make_led_grid_5x5(0.12533, na);
  PhaseObjectParams params;
  params.absorption_alpha = 0.0;
  params.amplitude_convention = AmplitudeConvention::kOneMinus;
  const std::vector<double> flat(28 * 28, 0.0);
  const ThinObject uniform = digit_to_phase_object(flat, 28, 28, params, grid);
  const SensorSpec sensor{28, 0.0, 0.0};

  double bright = 0.0;
  for (size_t l = 0; l < array.size(); ++l)
    if (array.leds[l].sx == 0.0 && array.leds[l].sy == 0.0) {
      const Image img = form_subimage(uniform, l, array, pupil, sensor);
      for (double v : img) bright = std::max(bright, v);
    }
  for (size_t l = 0; l < array.size(); ++l) {
    if (array.leds[l].bright_field) continue;
    const Image img = form_subimage(uniform, l, array, pupil, sensor);
    double peak = 0.0;
    for (double v : img) peak = std::max(peak, v);
    if (peak >= 1e-9 * bright) {
      detail = "LED " + std::to_string(l) + " leaks " + std::to_string(peak);
      return false;
    }
  }
  return true;
}

bool check_conv_oracle(std::string& detail) {
  Rng rng(4242);
  for (int trial = 0; trial < 8; ++trial) {
    GridSpec grid;
    grid.side_px = 6 + static_cast<int>(rng.below(11));
    grid.pitch_um = 1.0;
    grid.wavelength_um = 0.5;
    const double na = rng.uniform(0.1, 0.9);
    const PupilMask pupil = make_pupil(grid, na);
    LedArray array;
    array.leds.push_back({rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), true, 0});
    ThinObject obj = random_object(grid, rng);
    const SensorSpec sensor{grid.side_px, 0.0, 0.0};
    const Image fast = form_subimage(obj, 0, array, pupil, sensor);
    const Image slow = oracle_subimage_direct(obj, 0, array, pupil);
    double scale = 0.0;
    for (double v : slow) scale = std::max(scale, std::abs(v));
    for (size_t i = 0; i < fast.size(); ++i)
      if (std::abs(fast[i] - slow[i]) > 1e-10 * std::max(1.0, scale)) {
        detail = "fft/direct mismatch at trial " + std::to_string(trial);
        return false;
      }
  }
  return true;
}

bool check_pixel_sample(std::string& detail) {
  Rng rng(99);
  for (int trial = 0; trial < 6; ++trial) {
    const int in = 8 + static_cast<int>(rng.below(25));
    const int out = 2 + static_cast<int>(rng.below(static_cast<uint64_t>(in - 1)));
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
    if (std::abs(mean_out - mean_in) > 1e-12 * std::max(1.0, mean_in)) {
      detail = "mean drift for " + std::to_string(in) + "->" + std::to_string(out);
      return false;
    }
    const Image want = oracle_pixel_sample(img, in, out);
    for (size_t i = 0; i < got.size(); ++i)
      if (std::abs(got[i] - want[i]) > 1e-12) {
        detail = "overlap mismatch for " + std::to_string(in) + "->" +
                 std::to_string(out);
        return false;
      }
  }
  return true;
}

bool check_physical_layer(std::string& detail) {
  Rng rng(31337);
  const int B = 3, L = 25, P = 49;
  std::vector<double> stack(static_cast<size_t>(B) * L * P);
  for (double& v : stack) v = rng.uniform(-1.0, 1.0);
  std::vector<double> w1(L), w2(L), combo(L);
  for (int l = 0; l < L; ++l) {
    w1[l] = rng.uniform(-1.0, 1.0);
    w2[l] = rng.uniform(-1.0, 1.0);
  }
  const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
  for (int l = 0; l < L; ++l) combo[l] = a * w1[l] + b * w2[l];
  std::vector<double> y1(B * P), y2(B * P), yc(B * P);
  physical_layer_forward(stack.data(), B, L, P, w1.data(), y1.data());
  physical_layer_forward(stack.data(), B, L, P, w2.data(), y2.data());
  physical_layer_forward(stack.data(), B, L, P, combo.data(), yc.data());
  for (int i = 0; i < B * P; ++i)
    if (std::abs(yc[i] - (a * y1[i] + b * y2[i])) > 1e-12 * 60.0) {
      detail = "linearity violated";
      return false;
    }
  std::vector<double> wneg(L), yn(B * P);
  for (int l = 0; l < L; ++l) wneg[l] = -w1[l];
  physical_layer_forward(stack.data(), B, L, P, wneg.data(), yn.data());
  for (int i = 0; i < B * P; ++i)
    if (yn[i] != -y1[i]) {
      detail = "odd symmetry violated";
      return false;
    }
  return true;
}

bool check_gradcheck_small(std::string& detail) {
  const int side = 8, classes = 3, B = 2;
  Cnn<double> model(side, classes, B);
  model.init_params(11);
  model.set_keep_prob(1.0);
  Rng rng(12);
  std::vector<double> x(static_cast<size_t>(B) * side * side);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  std::vector<int> labels{1, 2};

  model.forward(x.data(), B, labels.data(), false, nullptr);
  model.backward(nullptr);
  auto loss_only = [&] {
    return model.forward(x.data(), B, labels.data(), false, nullptr, true);
  };
  auto margin = [&] { return model.kink_margin(); };
  Rng pick(5);
  const nn::GradCheckResult res = nn::grad_check(
      loss_only, margin, model.params(), model.grads(), 1e-5, 40, pick);
  if (res.max_rel_error >= 1e-5) {
    detail = "max rel error " + std::to_string(res.max_rel_error);
    return false;
  }
  return true;
}

bool check_majority_vote(std::string& detail) {
  Rng rng(808);
  for (int trial = 0; trial < 50; ++trial) {
    const int K = 1 + static_cast<int>(rng.below(9));
    const int N = 1 + static_cast<int>(rng.below(40));
    const int C = 2 + static_cast<int>(rng.below(5));
    std::vector<std::vector<int>> sets(K, std::vector<int>(N));
    for (auto& s : sets)
      for (int& v : s) v = static_cast<int>(rng.below(static_cast<uint64_t>(C)));
    const std::vector<int> got = majority_vote(sets);
    for (int i = 0; i < N; ++i) {
      std::vector<int> hist(static_cast<size_t>(C), 0);
      for (const auto& s : sets) hist[static_cast<size_t>(s[i])]++;
      int best = 0;
      for (int c = 1; c < C; ++c)
        if (hist[static_cast<size_t>(c)] > hist[static_cast<size_t>(best)]) best = c;
      if (got[static_cast<size_t>(i)] != best) {
        detail = "vote mismatch";
        return false;
      }
    }
  }
  return true;
}

bool check_canonicalize(std::string& detail) {
  Rng rng(1312);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> w(1 + rng.below(30));
    for (double& v : w) v = rng.uniform(-1.0, 1.0);
    bool all_zero = true;
    for (double v : w) all_zero &= v == 0.0;
    if (all_zero) w[0] = 0.5;
    std::vector<double> neg(w.size());
    for (size_t i = 0; i < w.size(); ++i) neg[i] = -w[i];
    const auto cw = canonicalize_sign(w);
    if (canonicalize_sign(cw) != cw || canonicalize_sign(neg) != cw) {
      detail = "canonicalization not idempotent/sign-invariant";
      return false;
    }
  }
  return true;
}

}  // namespace

std::vector<SelfCheck> build_selfchecks(const std::string& corrupt) {
  std::vector<SelfCheck> checks;
  const bool corrupt_pupil = corrupt == "pupil-symmetry";
  checks.push_back({"pupil-symmetry", [corrupt_pupil](std::string& d) {
                      return check_pupil_symmetry(d, corrupt_pupil);
                    }});
  checks.push_back({"parseval", check_parseval});
  checks.push_back({"tilt-shift", check_tilt_shift});
  checks.push_back({"darkfield-null", check_darkfield_null});
  checks.push_back({"conv-oracle", check_conv_oracle});
  checks.push_back({"pixel-sample", check_pixel_sample});
  checks.push_back({"physical-layer-algebra", check_physical_layer});
  checks.push_back({"gradcheck-small", check_gradcheck_small});
  checks.push_back({"majority-vote", check_majority_vote});
  checks.push_back({"canonicalize-sign", check_canonicalize});
  return checks;
}

bool run_selfchecks(const std::string& corrupt) {
  std::string first_failure;
  for (const SelfCheck& check : build_selfchecks(corrupt)) {
    std::string detail;
    const bool ok = check.fn(detail);
    std::printf("%-26s %s%s%s\n", check.name.c_str(), ok ? "PASS" : "FAIL",
                detail.empty() ? "" : "  ", detail.c_str());
    if (!ok && first_failure.empty()) first_failure = check.name;
  }
  if (!first_failure.empty()) {
    std::printf("selftest: FAILED at %s\n", first_failure.c_str());
    return false;
  }
  return true;
}

}  // namespace dpcnn
