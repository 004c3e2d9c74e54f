// Built-in synthetic digit source: 16 stroke-glyph templates covering the ten
// digit classes, rendered with anti-aliased strokes and per-sample geometric
// jitter. Keeps the whole pipeline runnable without any external image files.
#pragma once

#include <cstdint>
#include <vector>

#include "dpcnn/rng.hpp"

namespace dpcnn {

struct GlyphJitter {
  double rotate_rad = 0.21;     // uniform +/- range
  double scale_lo = 0.85, scale_hi = 1.15;
  double shear = 0.15;          // uniform +/- range
  double translate = 0.06;      // unit-box units, +/- range
  double warp_amp = 0.035;      // smooth sinusoidal warp amplitude
  double width_lo = 1.2, width_hi = 2.2;   // stroke width, px
  double height_lo = 0.75, height_hi = 1.0;  // glyph height-profile scale
};

// Number of distinct glyph templates (10 classes, some with two variants).
int glyph_template_count();

// Renders one jittered sample of class `digit` (0..9) into a 28x28 grayscale
// image with values in [0, 1]. Deterministic in the rng stream.
std::vector<double> render_glyph(int digit, Rng& rng,
                                 const GlyphJitter& jitter = {});

// Renders the clean (unjittered) template `variant` of class `digit`;
// variant counts vary per class (see glyph_variants).
int glyph_variants(int digit);
std::vector<double> render_glyph_template(int digit, int variant,
                                          double stroke_width_px = 1.8);

}  // namespace dpcnn
