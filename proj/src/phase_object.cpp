#include "dpcnn/phase_object.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpcnn {

void PhaseObjectParams::validate() const {
  if (refractive_index < 1.0)
    throw std::invalid_argument("PhaseObjectParams: refractive index must be >= 1");
  if (!(max_thickness_um > 0.0))
    throw std::invalid_argument("PhaseObjectParams: thickness must be positive");
  if (!(wavelength_um > 0.0))
    throw std::invalid_argument("PhaseObjectParams: wavelength must be positive");
  if (absorption_alpha < 0.0 || absorption_alpha > 1.0)
    throw std::invalid_argument("PhaseObjectParams: alpha must be in [0, 1]");
}

ThinObject digit_to_phase_object(const std::vector<double>& g, int g_h, int g_w,
                                 const PhaseObjectParams& params,
                                 const GridSpec& grid, int label) {
  params.validate();
  grid.validate();
  if (g.size() != static_cast<size_t>(g_h) * g_w)
    throw std::invalid_argument("digit_to_phase_object: image size mismatch");
  if (g_h > grid.side_px || g_w > grid.side_px)
    throw std::invalid_argument("digit_to_phase_object: image exceeds grid");
  for (double v : g)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("digit_to_phase_object: g values must be in [0, 1]");

  const int n = grid.side_px;
  const int oy = (n - g_h) / 2, ox = (n - g_w) / 2;
  const double phase_scale = 2.0 * std::numbers::pi * params.refractive_index *
                             params.max_thickness_um / params.wavelength_um;
  const bool literal = params.amplitude_convention == AmplitudeConvention::kLiteral;

  ThinObject obj;
  obj.grid = grid;
  obj.label = label;
  obj.amplitude.assign(grid.samples(), literal ? 0.0 : 1.0);
  obj.phase.assign(grid.samples(), 0.0);
  for (int y = 0; y < g_h; ++y)
    for (int x = 0; x < g_w; ++x) {
      const double gv = g[static_cast<size_t>(y) * g_w + x];
      const size_t i = static_cast<size_t>(y + oy) * n + (x + ox);
      obj.phase[i] = phase_scale * gv;
      obj.amplitude[i] = literal ? params.absorption_alpha * gv
                                 : 1.0 - params.absorption_alpha * gv;
    }
  return obj;
}

}  // namespace dpcnn
