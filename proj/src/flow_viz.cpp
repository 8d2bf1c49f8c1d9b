#include "efenet/flow_viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "efenet/io.hpp"

namespace efenet {

double flow_magnitude_percentile(const FlowField& flow, double percentile) {
  if (!(percentile >= 0.0 && percentile <= 100.0)) throw std::invalid_argument("percentile must lie in [0, 100]");
  std::vector<double> mags;
  mags.reserve(static_cast<std::size_t>(flow.height()) * flow.width());
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) mags.push_back(std::hypot(flow.dx(y, x), flow.dy(y, x)));
  if (mags.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(std::lround(percentile / 100.0 * static_cast<double>(mags.size() - 1)));
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end());
  return mags[k];
}

Frame flow_to_color(const FlowField& flow, double normalizer) {
  const double norm = normalizer > 0.0 ? normalizer : 1.0;
  Frame out(flow.height(), flow.width(), 3);
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) {
      const double dx = flow.dx(y, x), dy = flow.dy(y, x);
      if (!std::isfinite(dx) || !std::isfinite(dy)) throw std::invalid_argument("flow_to_color: non-finite flow");
      const double s = std::min(std::hypot(dx, dy) / norm, 1.0);
      double hue = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
      if (hue < 0.0) hue += 360.0;
      // HSV -> RGB with V = 1.
      const double h6 = hue / 60.0;
      const int sector = static_cast<int>(h6) % 6;
      const double f = h6 - std::floor(h6);
      const double p = 1.0 - s, q = 1.0 - s * f, t = 1.0 - s * (1.0 - f);
      double r = 1.0, g = 1.0, b = 1.0;
      switch (sector) {
        case 0: r = 1.0, g = t, b = p; break;
        case 1: r = q, g = 1.0, b = p; break;
        case 2: r = p, g = 1.0, b = t; break;
        case 3: r = p, g = q, b = 1.0; break;
        case 4: r = t, g = p, b = 1.0; break;
        default: r = 1.0, g = p, b = q; break;
      }
      out.at(y, x, 0) = static_cast<float>(r);
      out.at(y, x, 1) = static_cast<float>(g);
      out.at(y, x, 2) = static_cast<float>(b);
    }
  return out;
}

std::vector<std::pair<std::string, std::string>> flow_legend(double normalizer) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", normalizer);
  return {{"Flow-Encoding", "HSV: hue = atan2(dy, dx) in degrees (0 = right, 90 = down), saturation = "
                            "min(|flow| / normalizer, 1), value = 1; white = zero motion"},
          {"Flow-Normalizer", std::string(buf) + " px (99th percentile of |flow|)"}};
}

void write_flow_visualization(const std::filesystem::path& flo_path, const std::filesystem::path& png_path) {
  const FlowField flow = io::read_flo(flo_path);
  const double norm = flow_magnitude_percentile(flow);
  io::write_png(png_path, flow_to_color(flow, norm), flow_legend(norm));
}

}  // namespace efenet
