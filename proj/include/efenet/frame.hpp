#pragma once

#include <utility>

#include "efenet/tensor.hpp"

namespace efenet {

/// Image with intensities nominally in [0, 1] and 1 or 3 channels.
class Frame {
 public:
  Frame() = default;
  Frame(int height, int width, int channels, float fill = 0.0f);
  explicit Frame(Tensor pixels);

  int height() const { return pixels_.height(); }
  int width() const { return pixels_.width(); }
  int channels() const { return pixels_.channels(); }
  const Shape& shape() const { return pixels_.shape(); }

  float& at(int y, int x, int c) { return pixels_(c, y, x); }
  float at(int y, int x, int c) const { return pixels_(c, y, x); }

  const Tensor& tensor() const { return pixels_; }
  Tensor& tensor() { return pixels_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  Tensor pixels_;
};

/// Per-pixel displacement (dx, dy) in pixels. Backward convention: the value at
/// (y, x) points to the source sample location (x + dx, y + dy).
class FlowField {
 public:
  FlowField() = default;
  FlowField(int height, int width, float dx = 0.0f, float dy = 0.0f);
  explicit FlowField(Tensor displacement);

  int height() const { return flow_.height(); }
  int width() const { return flow_.width(); }

  float& dx(int y, int x) { return flow_(0, y, x); }
  float& dy(int y, int x) { return flow_(1, y, x); }
  float dx(int y, int x) const { return flow_(0, y, x); }
  float dy(int y, int x) const { return flow_(1, y, x); }

  const Tensor& tensor() const { return flow_; }
  Tensor& tensor() { return flow_; }

  friend bool operator==(const FlowField&, const FlowField&) = default;

 private:
  Tensor flow_;
};

}  // namespace efenet
