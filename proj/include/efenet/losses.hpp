#pragma once

#include <span>

#include "efenet/autograd.hpp"
#include "efenet/frame.hpp"

namespace efenet {

/// Border (pixels) excluded from the warping losses by default; 0 disables masking.
inline constexpr int kWarpLossBorder = 4;

struct LossWeights {
  double sr = 1.0;
  double flow1 = 0.1;
  double flow2 = 0.1;

  /// Throws std::invalid_argument for negative or non-finite weights.
  void validate() const;
};

struct LossComponents {
  double sr = 0.0;
  double flow1 = 0.0;
  double flow2 = 0.0;
};

// Per-sample building blocks, shared by the public API, the training graph
// and the double-precision gradient checks. Values accumulate in double;
// gradients, when requested, are added into *grad scaled by grad_scale.

/// sum_k sqrt((pred_k - gt_k)^2 + eps^2) over every element.
template <class T>
double charbonnier_sum(const BasicTensor<T>& pred, const BasicTensor<T>& gt,
                       BasicTensor<T>* grad_pred = nullptr, double grad_scale = 1.0);

/// sum over interior pixels and channels of (warp(ref, flow) - gt)^2, with
/// `border` pixels excluded on each side. Gradient is w.r.t. the flow.
template <class T>
double warp_squared_error(const BasicTensor<T>& ref, const BasicTensor<T>& flow, const BasicTensor<T>& gt,
                          int border, BasicTensor<T>* grad_flow = nullptr, double grad_scale = 1.0);

/// Charbonnier reconstruction loss of one sample.
double loss_sr(const Frame& pred, const Frame& gt);
/// Batch mean of the per-sample reconstruction loss.
double loss_sr(std::span<const Frame> preds, std::span<const Frame> gts);

/// 1/2 sum_i ||W(ref, f_i) - gt_i||^2 for one sample.
double loss_flow_steps(const Frame& ref_hr, std::span<const FlowField> flows, std::span<const Frame> gt_hr_seq,
                       int border = kWarpLossBorder);

/// ||W(ref, refined) - gt_last||^2 for one sample.
double loss_flow_refined(const Frame& ref_hr, const FlowField& refined, const Frame& gt_hr_last,
                         int border = kWarpLossBorder);

double total_loss(const LossComponents& components, const LossWeights& weights);

// Graph nodes (scalar outputs) used by training.
ag::Var sr_loss_node(ag::Var pred, const Tensor& gt);
ag::Var warp_loss_node(const Tensor& ref, ag::Var flow, const Tensor& gt, int border, double factor);

}  // namespace efenet
