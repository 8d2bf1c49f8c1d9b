#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "efenet/autograd.hpp"
#include "efenet/frame.hpp"
#include "efenet/nn.hpp"

namespace efenet {

/// Flow refinement network: consumes all n per-step flows concatenated in
/// temporal order (2n channels) and predicts the flow of the furthest frame.
///
/// U-Net with four stride-2 convolutions (32/64/96/128 channels) and four 4x4
/// transposed convolutions with skips. In residual mode the output is
/// flows[n-1] + delta; a zero head makes refinement an exact identity.
struct FlowRefinerParams {
  int sequence_length = 1;
  bool residual = true;
  nn::LayerStack net;

  static FlowRefinerParams create(int sequence_length, std::uint64_t seed,
                                  nn::HeadInit head = nn::HeadInit::Zero, bool residual = true);
  std::vector<ag::Parameter*> parameters() { return net.parameters(); }
  std::vector<const ag::Parameter*> parameters() const { return net.parameters(); }
};

/// flows: n graph nodes with 2 channels each, extent divisible by 16.
ag::Var refine_flows(ag::Graph& g, FlowRefinerParams& params, std::span<const ag::Var> flows);
ag::Var refine_flows(ag::Graph& g, const FlowRefinerParams& params, std::span<const ag::Var> flows);

FlowField refine_flows(std::span<const FlowField> flows, const FlowRefinerParams& params);

}  // namespace efenet
