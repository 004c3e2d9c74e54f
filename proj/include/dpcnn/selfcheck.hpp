// Fast invariant checks shared by the CLI selftest and the acceptance suite,
// plus independent (non-FFT) oracle implementations they verify against.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dpcnn/optics.hpp"

namespace dpcnn {

// Direct spatial-domain oracle for sub-image formation: builds the shifted
// pupil's PSF by explicit DFT summation and applies a direct circular
// convolution. Returns the object-grid intensity (no pixel sampling, no
// noise). O(N^4); for small grids only.
Image oracle_subimage_direct(const ThinObject& object, size_t led_index,
                             const LedArray& array, const PupilMask& pupil);

// Brute-force rectangle-overlap pixel sampling oracle.
Image oracle_pixel_sample(const Image& intensity, int in_side, int out_side);

struct SelfCheck {
  std::string name;
  std::function<bool(std::string& detail)> fn;
};

// `corrupt` names a check whose inputs are deliberately sabotaged; used to
// demonstrate failure visibility.
std::vector<SelfCheck> build_selfchecks(const std::string& corrupt = "");

// Runs all checks, prints one pass/fail line each; returns true if all pass.
bool run_selfchecks(const std::string& corrupt = "");

}  // namespace dpcnn
