#pragma once

// Resolution-aware image and flow primitives shared by the whole pipeline.

#include <cmath>

#include "efenet/frame.hpp"

namespace efenet {

inline constexpr double kCharbonnierEps = 1e-3;

/// Keys-cubic resampling by `factor`; output extent is round(dim * factor).
/// factor == 1 returns an exact copy.
Frame bicubic_resample(const Frame& frame, double factor);
Tensor bicubic_resample(const Tensor& t, double factor);

/// Bilinear backward warp of an image or feature map: out(y, x) samples source
/// at (x + dx, y + dy) with coordinates clamped to the source border.
Frame backward_warp(const Frame& source, const FlowField& flow);
Tensor backward_warp(const Tensor& source, const FlowField& flow);

/// End-to-end flow that first follows `far` and then `near`:
/// composed(p) = far(p) + near(p + far(p)).
FlowField compose_flows(const FlowField& near, const FlowField& far);

/// Bilinearly resamples a flow onto an (h, w) grid with pixel-center alignment,
/// scaling displacements by the grid ratio.
FlowField resize_flow(const FlowField& flow, int h, int w);

template <class T>
T charbonnier(T x) {
  return std::sqrt(x * x + static_cast<T>(kCharbonnierEps * kCharbonnierEps));
}

template <class T>
BasicTensor<T> charbonnier(const BasicTensor<T>& x) {
  BasicTensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = charbonnier(x[i]);
  return out;
}

/// Reflect-pads the spatial extent up to multiples of `multiple` (bottom/right).
Tensor pad_reflect(const Tensor& t, int multiple);
Tensor crop(const Tensor& t, int h, int w);

}  // namespace efenet
