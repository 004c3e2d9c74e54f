#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dpcnn/dpcnn.hpp"
#include "dpcnn/errors.hpp"

namespace dpcnn {
namespace {

constexpr int kCanvas = 128;
constexpr int kBlock = 5;  // half-size of each LED square, px

void write_pgm(const std::string& path, const std::vector<uint8_t>& px,
               const std::string& comment) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("export_pattern: cannot open " + path);
  out << "P5\n# " << comment << "\n" << kCanvas << " " << kCanvas << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()),
            static_cast<std::streamsize>(px.size()));
  if (!out) throw IoError("export_pattern: short write to " + path);
}

}  // namespace

void export_pattern(const std::vector<double>& w, const LedArray& array,
                    const std::string& base_path) {
  if (w.size() != array.size())
    throw std::invalid_argument("export_pattern: weight/LED count mismatch");

  // CSV: enough digits to reproduce float32 exactly
  {
    std::ofstream csv(base_path + ".csv", std::ios::trunc);
    if (!csv) throw IoError("export_pattern: cannot open " + base_path + ".csv");
    csv << "led,sx,sy,ring,bright_field,weight\n";
    char buf[160];
    for (size_t l = 0; l < w.size(); ++l) {
      const Led& led = array.leds[l];
      std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%d,%d,%.9g\n", l, led.sx,
                    led.sy, led.ring_index, led.bright_field ? 1 : 0,
                    static_cast<double>(static_cast<float>(w[l])));
      csv << buf;
    }
    if (!csv) throw IoError("export_pattern: short write to " + base_path + ".csv");
  }

  double sine_extent = 0.0, max_abs = 0.0;
  for (size_t l = 0; l < w.size(); ++l) {
    sine_extent = std::max({sine_extent, std::abs(array.leds[l].sx),
                            std::abs(array.leds[l].sy)});
    max_abs = std::max(max_abs, std::abs(w[l]));
  }
  if (sine_extent == 0.0) sine_extent = 1.0;
  const double value_scale = max_abs > 0.0 ? 255.0 / max_abs : 0.0;

  std::vector<uint8_t> heat(kCanvas * kCanvas, 0), sign(kCanvas * kCanvas, 128);
  for (size_t l = 0; l < w.size(); ++l) {
    const Led& led = array.leds[l];
    const int cx = static_cast<int>(std::lround(
        (led.sx / sine_extent * 0.42 + 0.5) * (kCanvas - 1)));
    const int cy = static_cast<int>(std::lround(
        (led.sy / sine_extent * 0.42 + 0.5) * (kCanvas - 1)));
    const uint8_t hv = static_cast<uint8_t>(
        std::clamp(std::lround(std::abs(w[l]) * value_scale), 0l, 255l));
    const uint8_t sv = w[l] > 0.0 ? 255 : (w[l] < 0.0 ? 0 : 128);
    for (int dy = -kBlock; dy <= kBlock; ++dy)
      for (int dx = -kBlock; dx <= kBlock; ++dx) {
        const int x = cx + dx, y = cy + dy;
        if (x < 0 || y < 0 || x >= kCanvas || y >= kCanvas) continue;
        heat[static_cast<size_t>(y) * kCanvas + x] = hv;
        sign[static_cast<size_t>(y) * kCanvas + x] = sv;
      }
  }
  std::ostringstream comment;
  comment << "pixel 255 corresponds to |w| = " << max_abs;
  write_pgm(base_path + ".pgm", heat, comment.str());
  write_pgm(base_path + "_sign.pgm", sign, "0 = negative, 128 = zero, 255 = positive");
}

std::vector<double> parse_pattern_csv(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("parse_pattern_csv: cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line))
    throw IoError("parse_pattern_csv: empty file " + csv_path);
  std::vector<double> w;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t pos = line.find_last_of(',');
    if (pos == std::string::npos)
      throw IoError("parse_pattern_csv: malformed row in " + csv_path);
    w.push_back(std::stod(line.substr(pos + 1)));
  }
  return w;
}

}  // namespace dpcnn
