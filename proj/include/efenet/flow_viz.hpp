#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "efenet/frame.hpp"

namespace efenet {

/// HSV color coding of a flow field: hue is the direction atan2(dy, dx) in
/// degrees (0 = +x, 90 = +y, i.e. downward), saturation is the magnitude
/// divided by `normalizer` and clipped to 1, value is 1. Zero flow is white.
Frame flow_to_color(const FlowField& flow, double normalizer);

/// 99th percentile of the per-pixel flow magnitude.
double flow_magnitude_percentile(const FlowField& flow, double percentile = 99.0);

/// Text describing the encoding, stored as PNG tEXt chunks.
std::vector<std::pair<std::string, std::string>> flow_legend(double normalizer);

/// Reads a FLO1 file and writes its color coding with the legend embedded.
void write_flow_visualization(const std::filesystem::path& flo_path, const std::filesystem::path& png_path);

}  // namespace efenet
