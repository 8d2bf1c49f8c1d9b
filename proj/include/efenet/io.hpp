#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "efenet/frame.hpp"

namespace efenet::io {

/// Reads an 8-bit PNG. Gray (with or without alpha) yields one channel,
/// everything else three; alpha is dropped. Values map v / 255.
Frame read_png(const std::filesystem::path& path);

/// Writes an 8-bit PNG; values are clamped to [0, 1] and quantized as
/// floor(v * 255 + 0.5). Optional key/value pairs become tEXt chunks.
void write_png(const std::filesystem::path& path, const Frame& frame,
               const std::vector<std::pair<std::string, std::string>>& text = {});

std::uint8_t quantize(float v);

/// FLO1 flow file: "FLO1", uint16 H, uint16 W, then H*W little-endian float32
/// (dx, dy) pairs in row-major order.
FlowField read_flo(const std::filesystem::path& path);
void write_flo(const std::filesystem::path& path, const FlowField& flow);

}  // namespace efenet::io
