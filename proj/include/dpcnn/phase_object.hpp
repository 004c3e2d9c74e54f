// Conversion of grayscale height maps into thin transparent objects.
#pragma once

#include <vector>

#include "dpcnn/optics.hpp"

namespace dpcnn {

enum class AmplitudeConvention : uint32_t {
  kLiteral = 0,   // A = alpha * g
  kOneMinus = 1,  // A = 1 - alpha * g
};

struct PhaseObjectParams {
  double refractive_index = 1.2;
  double max_thickness_um = 2.5;
  double wavelength_um = 0.5;
  double absorption_alpha = 0.01;
  AmplitudeConvention amplitude_convention = AmplitudeConvention::kLiteral;

  void validate() const;
};

// Treats g (values in [0,1]) as the height-profile map of a clear object:
// phase = 2*pi*n*t*g/lambda, amplitude per the configured convention.
// g is zero-padded centered onto the target grid.
ThinObject digit_to_phase_object(const std::vector<double>& g, int g_h, int g_w,
                                 const PhaseObjectParams& params,
                                 const GridSpec& grid, int label = -1);

}  // namespace dpcnn
