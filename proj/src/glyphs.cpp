#include "dpcnn/glyphs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpcnn {
namespace {

using std::numbers::pi;

struct P {
  double x, y;
};
using Polyline = std::vector<P>;

// Glyph geometry lives in a unit box, x right, y down.
Polyline arc(double cx, double cy, double rx, double ry, double a0_deg,
             double a1_deg, int n = 24) {
  Polyline pl;
  pl.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double a = (a0_deg + (a1_deg - a0_deg) * i / n) * pi / 180.0;
    pl.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return pl;
}

Polyline line(std::initializer_list<P> pts) { return Polyline(pts); }

struct Glyph {
  int digit;
  std::vector<Polyline> strokes;
};

// 16 templates over the 10 classes; angles are in y-down orientation.
const std::vector<Glyph>& glyph_table() {
  static const std::vector<Glyph> table = [] {
    std::vector<Glyph> g;
    // 0: two roundness variants
    g.push_back({0, {arc(0.50, 0.50, 0.30, 0.42, 0, 360, 40)}});
    g.push_back({0, {arc(0.50, 0.50, 0.38, 0.44, 0, 360, 40)}});
    // 1: flagged and plain
    g.push_back({1, {line({{0.32, 0.22}, {0.54, 0.06}, {0.54, 0.94}}),
                     line({{0.34, 0.94}, {0.74, 0.94}})}});
    g.push_back({1, {line({{0.50, 0.06}, {0.50, 0.94}})}});
    // 2
    g.push_back({2, {arc(0.50, 0.30, 0.28, 0.24, 165, 350),
                     line({{0.775, 0.34}, {0.22, 0.94}}),
                     line({{0.22, 0.94}, {0.82, 0.94}})}});
    g.push_back({2, {arc(0.48, 0.27, 0.26, 0.21, 175, 340),
                     line({{0.72, 0.36}, {0.30, 0.70}, {0.18, 0.93}}),
                     line({{0.18, 0.93}, {0.85, 0.93}})}});
    // 3
    g.push_back({3, {arc(0.45, 0.28, 0.26, 0.22, 150, 430),
                     arc(0.45, 0.72, 0.29, 0.24, -70, 210)}});
    g.push_back({3, {line({{0.25, 0.08}, {0.75, 0.08}, {0.45, 0.42}}),
                     arc(0.48, 0.68, 0.28, 0.26, -60, 200)}});
    // 4
    g.push_back({4, {line({{0.60, 0.06}, {0.16, 0.60}, {0.88, 0.60}}),
                     line({{0.66, 0.30}, {0.66, 0.95}})}});
    g.push_back({4, {line({{0.28, 0.08}, {0.24, 0.52}, {0.84, 0.52}}),
                     line({{0.62, 0.08}, {0.62, 0.95}})}});
    // 5
    g.push_back({5, {line({{0.76, 0.08}, {0.30, 0.08}, {0.27, 0.44}}),
                     arc(0.47, 0.66, 0.27, 0.26, -80, 160)}});
    // 6
    g.push_back({6, {arc(0.52, 0.50, 0.42, 0.45, 250, 180, 30),
                     arc(0.49, 0.68, 0.23, 0.22, 0, 360, 32)}});
    // 7: plain and crossbarred
    g.push_back({7, {line({{0.18, 0.08}, {0.82, 0.08}, {0.40, 0.94}})}});
    g.push_back({7, {line({{0.18, 0.08}, {0.82, 0.08}, {0.40, 0.94}}),
                     line({{0.32, 0.50}, {0.68, 0.50}})}});
    // 8
    g.push_back({8, {arc(0.50, 0.29, 0.22, 0.20, 0, 360, 32),
                     arc(0.50, 0.71, 0.27, 0.24, 0, 360, 32)}});
    // 9
    g.push_back({9, {arc(0.50, 0.32, 0.24, 0.23, 0, 360, 32),
                     line({{0.73, 0.38}, {0.70, 0.70}, {0.58, 0.94}})}});
    return g;
  }();
  return table;
}

double dist_to_segment(double px, double py, const P& a, const P& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double wx = px - a.x, wy = py - a.y;
  const double vv = vx * vx + vy * vy;
  double t = vv > 0.0 ? (wx * vx + wy * vy) / vv : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

std::vector<double> rasterize(const std::vector<Polyline>& strokes,
                              double stroke_width_px, double peak) {
  constexpr int kSide = 28;
  // glyph unit box maps to a 20 x 22 px region centered in the frame
  constexpr double kW = 20.0, kH = 22.0, kOx = 4.0, kOy = 3.0;
  std::vector<double> img(kSide * kSide, 0.0);
  const double half = 0.5 * stroke_width_px;
  for (int y = 0; y < kSide; ++y)
    for (int x = 0; x < kSide; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      double d = 1e9;
      for (const Polyline& pl : strokes)
        for (size_t i = 0; i + 1 < pl.size(); ++i) {
          const P a{kOx + pl[i].x * kW, kOy + pl[i].y * kH};
          const P b{kOx + pl[i + 1].x * kW, kOy + pl[i + 1].y * kH};
          d = std::min(d, dist_to_segment(px, py, a, b));
        }
      const double cov = std::clamp(0.5 + (half - d), 0.0, 1.0);
      img[static_cast<size_t>(y) * kSide + x] = peak * cov;
    }
  return img;
}

}  // namespace

int glyph_template_count() { return static_cast<int>(glyph_table().size()); }

int glyph_variants(int digit) {
  int n = 0;
  for (const Glyph& g : glyph_table())
    if (g.digit == digit) ++n;
  return n;
}

std::vector<double> render_glyph_template(int digit, int variant,
                                          double stroke_width_px) {
  int seen = 0;
  for (const Glyph& g : glyph_table()) {
    if (g.digit != digit) continue;
    if (seen++ == variant) return rasterize(g.strokes, stroke_width_px, 1.0);
  }
  throw std::invalid_argument("render_glyph_template: no such digit/variant");
}

std::vector<double> render_glyph(int digit, Rng& rng, const GlyphJitter& jit) {
  if (digit < 0 || digit > 9)
    throw std::invalid_argument("render_glyph: digit must be 0..9");
  const int nv = glyph_variants(digit);
  const int variant = static_cast<int>(rng.below(static_cast<uint64_t>(nv)));
  int seen = 0;
  const Glyph* chosen = nullptr;
  for (const Glyph& g : glyph_table()) {
    if (g.digit != digit) continue;
    if (seen++ == variant) {
      chosen = &g;
      break;
    }
  }

  // sample one transform, apply to every stroke vertex
  const double th = rng.uniform(-jit.rotate_rad, jit.rotate_rad);
  const double sx = rng.uniform(jit.scale_lo, jit.scale_hi);
  const double sy = rng.uniform(jit.scale_lo, jit.scale_hi);
  const double sh = rng.uniform(-jit.shear, jit.shear);
  const double tx = rng.uniform(-jit.translate, jit.translate);
  const double ty = rng.uniform(-jit.translate, jit.translate);
  const double wamp = rng.uniform(0.0, jit.warp_amp);
  const double wfx = rng.uniform(2.0, 5.0), wfy = rng.uniform(2.0, 5.0);
  const double wpx = rng.uniform(0.0, 2.0 * pi), wpy = rng.uniform(0.0, 2.0 * pi);
  const double ct = std::cos(th), st = std::sin(th);

  std::vector<Polyline> strokes = chosen->strokes;
  for (Polyline& pl : strokes)
    for (P& p : pl) {
      double x = (p.x - 0.5) * sx, y = (p.y - 0.5) * sy;
      x += sh * y;
      const double xr = ct * x - st * y, yr = st * x + ct * y;
      x = xr + 0.5 + tx;
      y = yr + 0.5 + ty;
      // smooth low-frequency warp, shared by all strokes of the sample
      x += wamp * std::sin(wfx * y + wpx);
      y += wamp * std::sin(wfy * x + wpy);
      p = {x, y};
    }

  const double width = rng.uniform(jit.width_lo, jit.width_hi);
  const double peak = rng.uniform(jit.height_lo, jit.height_hi);
  return rasterize(strokes, width, peak);
}

}  // namespace dpcnn
