#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "efenet/autograd.hpp"
#include "efenet/flow_estimator.hpp"
#include "efenet/flow_refiner.hpp"
#include "efenet/frame.hpp"
#include "efenet/nn.hpp"

namespace efenet {

inline constexpr int kPyramidLevels = 4;
inline constexpr std::array<int, kPyramidLevels> kPyramidChannels = {16, 32, 64, 96};
/// Pipeline inputs are reflect-padded to this multiple and cropped afterwards.
inline constexpr int kPipelineMultiple = 16;

/// Level s (0-based here) has extent (H / 2^s, W / 2^s) and kPyramidChannels[s] channels.
struct FeaturePyramid {
  std::array<Tensor, kPyramidLevels> levels;
};

/// Shared feature encoder and the U-Net decoder.
struct SynthesisParams {
  int image_channels = 3;
  nn::LayerStack encoder;
  nn::LayerStack decoder;

  static SynthesisParams create(int image_channels, std::uint64_t seed,
                                nn::HeadInit head = nn::HeadInit::Zero);
  std::vector<ag::Parameter*> parameters();
  std::vector<const ag::Parameter*> parameters() const;
};

/// All four parameter groups of the model.
struct ModelParams {
  FlowEstimatorParams estimator;
  FlowRefinerParams refiner;
  SynthesisParams synthesis;

  static ModelParams create(int image_channels, int sequence_length, std::uint64_t seed,
                            nn::HeadInit head = nn::HeadInit::Zero);
  int sequence_length() const { return refiner.sequence_length; }
  int image_channels() const { return estimator.image_channels; }
  std::vector<ag::Parameter*> parameters();
  std::vector<const ag::Parameter*> parameters() const;
  void zero_grad();
};

using GraphPyramid = std::array<ag::Var, kPyramidLevels>;

// Graph-level building blocks (training path). Extents must already satisfy
// the divisibility requirements.
GraphPyramid encode(ag::Graph& g, SynthesisParams& params, ag::Var image);
ag::Var scale_flow(ag::Graph& g, ag::Var flow, int level);
ag::Var decode(ag::Graph& g, SynthesisParams& params, ag::Var lr_up, ag::Var warped_ref,
               const GraphPyramid& lr_pyramid, const GraphPyramid& warped_pyramid);

/// Intermediate and final nodes of one forward pass, cropped to the
/// unpadded extent.
struct PipelineNodes {
  std::vector<ag::Var> flows;
  ag::Var refined;
  ag::Var output;
};

/// Full forward pass on a graph. lr_upsampled holds the n bicubically
/// upsampled LR frames at the reference extent.
PipelineNodes forward_pipeline(ag::Graph& g, ModelParams& params, const Tensor& ref_hr,
                               std::span<const Tensor> lr_upsampled);
PipelineNodes forward_pipeline(ag::Graph& g, const ModelParams& params, const Tensor& ref_hr,
                               std::span<const Tensor> lr_upsampled);

// Frame-level API (frozen parameters).
FeaturePyramid encode(const Frame& frame, const SynthesisParams& params);
/// Average-pools the flow by 2^(level-1) and divides displacements by the same
/// factor; level is 1-based and level 1 is the identity.
FlowField scale_flow(const FlowField& flow, int level);
std::pair<Frame, FeaturePyramid> warp_reference(const Frame& ref_hr, const FeaturePyramid& ref_pyramid,
                                                const FlowField& refined_flow);
/// Output is lr_up plus the decoder residual, unclamped.
Frame decode(const Frame& lr_up, const Frame& warped_ref, const FeaturePyramid& lr_pyramid,
             const FeaturePyramid& warped_ref_pyramid, const SynthesisParams& params);

/// Super-resolves the furthest LR frame; the result is clamped to [0, 1].
Frame super_resolve(const Frame& ref_hr, std::span<const Frame> lr_sequence, const ModelParams& params);

/// Flows produced on the way: raw per-step estimates and the refined furthest flow.
struct SuperResolveTrace {
  Frame output;
  std::vector<FlowField> flows;
  FlowField refined;
};
SuperResolveTrace super_resolve_trace(const Frame& ref_hr, std::span<const Frame> lr_sequence,
                                      const ModelParams& params);

}  // namespace efenet
