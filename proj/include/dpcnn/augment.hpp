// Stack augmentation (rotation, blur, elastic deformation, noise) and cubic
// resizing. One transform draw applies identically to all sub-images of a
// stack, since they picture the same physical sample.
#pragma once

#include <vector>

#include "dpcnn/rng.hpp"

namespace dpcnn {

struct AugmentSpec {
  bool rotate = false;          // k*90 degrees, k drawn uniformly from 0..3
  bool blur = false;            // 3x3 Gaussian kernel
  double blur_sigma = 0.85;
  bool elastic = false;         // Simard-style smoothed displacement field
  double elastic_sigma_px = 4.0;
  double elastic_amp_px = 2.0;
  double noise_sigma = 0.0;     // additive Gaussian, 0 disables

  bool identity() const {
    return !rotate && !blur && !elastic && noise_sigma == 0.0;
  }
};

// Exact k*90-degree counterclockwise rotation of a square image.
std::vector<double> rotate90(const std::vector<double>& img, int side, int k);

// 3x3 Gaussian blur with symmetric (reflective) borders; the kernel is
// normalized so the image mean is preserved.
std::vector<double> blur3x3(const std::vector<double>& img, int h, int w,
                            double sigma);

// Catmull-Rom bicubic resize with edge clamping; same-size is bit-exact.
std::vector<double> resize_cubic(const std::vector<double>& img, int h, int w,
                                 int out_h, int out_w);

struct SubImageStack;

// Applies the enabled transforms; geometric parameters are drawn once per
// stack, noise is drawn per pixel.
SubImageStack augment(const SubImageStack& stack, const AugmentSpec& spec,
                      Rng& rng);

}  // namespace dpcnn
