#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "efenet/autograd.hpp"
#include "efenet/frame.hpp"
#include "efenet/nn.hpp"

namespace efenet {

/// Cross-scale flow network shared across time steps.
///
/// Four stride-2 3x3 convolutions (16/32/64/96 channels) followed by four 4x4
/// transposed convolutions with U-Net skips, a full-resolution 3x3 fusion layer
/// and a linear 2-channel head. With a zero head the predicted flow is exactly
/// zero. Inputs are the reference and the upsampled LR frame, each shifted to
/// [-0.5, 0.5] and concatenated.
struct FlowEstimatorParams {
  int image_channels = 3;
  nn::LayerStack net;

  static FlowEstimatorParams create(int image_channels, std::uint64_t seed,
                                    nn::HeadInit head = nn::HeadInit::Zero);
  int input_channels() const { return 2 * image_channels; }
  std::vector<ag::Parameter*> parameters() { return net.parameters(); }
  std::vector<const ag::Parameter*> parameters() const { return net.parameters(); }
};

/// Spatial extents must be divisible by this.
inline constexpr int kFlowNetMultiple = 16;

/// Differentiable forward pass. ref and lr_up must share extent and channels.
ag::Var estimate_flow(ag::Graph& g, FlowEstimatorParams& params, const Tensor& ref_hr,
                      const Tensor& lr_upsampled);
/// Same pass with frozen weights.
ag::Var estimate_flow(ag::Graph& g, const FlowEstimatorParams& params, const Tensor& ref_hr,
                      const Tensor& lr_upsampled);

FlowField estimate_flow(const Frame& ref_hr, const Frame& lr_upsampled,
                        const FlowEstimatorParams& params);

/// Upsamples each LR frame 4x (bicubic) and applies the shared estimator.
std::vector<FlowField> estimate_flows_sequence(const Frame& ref_hr, std::span<const Frame> lr_sequence,
                                               const FlowEstimatorParams& params);

}  // namespace efenet
