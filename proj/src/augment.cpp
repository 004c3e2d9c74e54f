#include "dpcnn/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dpcnn/dataset.hpp"

namespace dpcnn {
namespace {

// symmetric border reflection: x[-1] -> x[0], x[n] -> x[n-1]
inline int reflect(int i, int n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - 1 - i;
  return i;
}

inline double clampd(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

// Catmull-Rom kernel weights for fractional offset t in [0,1).
inline void catmull_rom(double t, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = -0.5 * t3 + t2 - 0.5 * t;
  w[1] = 1.5 * t3 - 2.5 * t2 + 1.0;
  w[2] = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
  w[3] = 0.5 * t3 - 0.5 * t2;
}

std::vector<double> resize_cubic_1d_rows(const std::vector<double>& img, int h,
                                         int w, int out_w) {
  std::vector<double> out(static_cast<size_t>(h) * out_w);
  const double scale = static_cast<double>(w) / out_w;
  for (int x = 0; x < out_w; ++x) {
    const double src = (x + 0.5) * scale - 0.5;
    const int base = static_cast<int>(std::floor(src));
    double wk[4];
    catmull_rom(src - base, wk);
    int taps[4];
    for (int k = 0; k < 4; ++k) taps[k] = std::clamp(base - 1 + k, 0, w - 1);
    for (int y = 0; y < h; ++y) {
      const double* row = img.data() + static_cast<size_t>(y) * w;
      out[static_cast<size_t>(y) * out_w + x] =
          wk[0] * row[taps[0]] + wk[1] * row[taps[1]] + wk[2] * row[taps[2]] +
          wk[3] * row[taps[3]];
    }
  }
  return out;
}

std::vector<double> transpose(const std::vector<double>& img, int h, int w) {
  std::vector<double> out(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out[static_cast<size_t>(x) * h + y] = img[static_cast<size_t>(y) * w + x];
  return out;
}

}  // namespace

std::vector<double> rotate90(const std::vector<double>& img, int side, int k) {
  if (img.size() != static_cast<size_t>(side) * side)
    throw std::invalid_argument("rotate90: image must be square");
  k = ((k % 4) + 4) % 4;
  if (k == 0) return img;
  std::vector<double> out(img.size());
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      // counterclockwise: out(y,x) = in(x, side-1-y)
      int sy = x, sx = side - 1 - y;
      if (k == 2) { sy = side - 1 - y; sx = side - 1 - x; }
      if (k == 3) { sy = side - 1 - x; sx = y; }
      out[static_cast<size_t>(y) * side + x] = img[static_cast<size_t>(sy) * side + sx];
    }
  return out;
}

std::vector<double> blur3x3(const std::vector<double>& img, int h, int w,
                            double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("blur3x3: sigma must be positive");
  if (img.size() != static_cast<size_t>(h) * w)
    throw std::invalid_argument("blur3x3: image size mismatch");
  // separable 1D taps exp(-d^2 / 2 sigma^2), normalized
  double k0 = std::exp(-0.5 / (sigma * sigma));
  double taps[3] = {k0, 1.0, k0};
  const double norm = taps[0] + taps[1] + taps[2];
  for (double& t : taps) t /= norm;

  std::vector<double> tmp(img.size()), out(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -1; k <= 1; ++k)
        acc += taps[k + 1] * img[static_cast<size_t>(y) * w + reflect(x + k, w)];
      tmp[static_cast<size_t>(y) * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -1; k <= 1; ++k)
        acc += taps[k + 1] * tmp[static_cast<size_t>(reflect(y + k, h)) * w + x];
      out[static_cast<size_t>(y) * w + x] = acc;
    }
  return out;
}

std::vector<double> resize_cubic(const std::vector<double>& img, int h, int w,
                                 int out_h, int out_w) {
  if (h < 4 || w < 4)
    throw std::invalid_argument("resize_cubic: input must be at least 4x4");
  if (out_h < 1 || out_w < 1)
    throw std::invalid_argument("resize_cubic: output dims must be positive");
  if (img.size() != static_cast<size_t>(h) * w)
    throw std::invalid_argument("resize_cubic: image size mismatch");
  if (out_h == h && out_w == w) return img;
  std::vector<double> rows = resize_cubic_1d_rows(img, h, w, out_w);
  std::vector<double> t = transpose(rows, h, out_w);
  std::vector<double> cols = resize_cubic_1d_rows(t, out_w, h, out_h);
  return transpose(cols, out_w, out_h);
}

SubImageStack augment(const SubImageStack& stack, const AugmentSpec& spec,
                      Rng& rng) {
  if (spec.identity()) return stack;
  const int h = stack.height, w = stack.width;
  if (spec.rotate && h != w)
    throw std::invalid_argument("augment: rotation requires square images");

  // one geometric draw per stack
  const int k_rot = spec.rotate ? static_cast<int>(rng.below(4)) : 0;
  std::vector<double> disp_x, disp_y;
  if (spec.elastic) {
    std::vector<double> rx(static_cast<size_t>(h) * w), ry(rx.size());
    for (double& v : rx) v = rng.uniform(-1.0, 1.0);
    for (double& v : ry) v = rng.uniform(-1.0, 1.0);
    // Gaussian smoothing of the raw field, truncated at 3 sigma
    const int rad = std::max(1, static_cast<int>(std::ceil(3.0 * spec.elastic_sigma_px)));
    std::vector<double> taps(2 * rad + 1);
    double norm = 0.0;
    for (int i = -rad; i <= rad; ++i) {
      taps[i + rad] = std::exp(-0.5 * i * i / (spec.elastic_sigma_px * spec.elastic_sigma_px));
      norm += taps[i + rad];
    }
    for (double& t : taps) t /= norm;
    auto smooth = [&](std::vector<double>& f) {
      std::vector<double> tmp(f.size());
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double acc = 0.0;
          for (int i = -rad; i <= rad; ++i)
            acc += taps[i + rad] * f[static_cast<size_t>(y) * w + reflect(x + i, w)];
          tmp[static_cast<size_t>(y) * w + x] = acc;
        }
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double acc = 0.0;
          for (int i = -rad; i <= rad; ++i)
            acc += taps[i + rad] * tmp[static_cast<size_t>(reflect(y + i, h)) * w + x];
          f[static_cast<size_t>(y) * w + x] = acc * spec.elastic_amp_px;
        }
    };
    smooth(rx);
    smooth(ry);
    disp_x = std::move(rx);
    disp_y = std::move(ry);
  }

  SubImageStack out = stack;
  for (int l = 0; l < stack.led_count; ++l) {
    std::vector<double> img(stack.image(l), stack.image(l) + static_cast<size_t>(h) * w);
    if (spec.rotate) img = rotate90(img, h, k_rot);
    if (spec.blur) img = blur3x3(img, h, w, spec.blur_sigma);
    if (spec.elastic) {
      std::vector<double> warped(img.size());
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const size_t i = static_cast<size_t>(y) * w + x;
          const double sx = clampd(x + disp_x[i], 0.0, w - 1.0);
          const double sy = clampd(y + disp_y[i], 0.0, h - 1.0);
          const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
          const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
          const double fx = sx - x0, fy = sy - y0;
          warped[i] = (1 - fy) * ((1 - fx) * img[static_cast<size_t>(y0) * w + x0] +
                                  fx * img[static_cast<size_t>(y0) * w + x1]) +
                      fy * ((1 - fx) * img[static_cast<size_t>(y1) * w + x0] +
                            fx * img[static_cast<size_t>(y1) * w + x1]);
        }
      img = std::move(warped);
    }
    if (spec.noise_sigma > 0.0)
      for (double& v : img) v += rng.normal(0.0, spec.noise_sigma);
    float* dst = out.image(l);
    for (size_t i = 0; i < img.size(); ++i) dst[i] = static_cast<float>(img[i]);
  }
  return out;
}

}  // namespace dpcnn
