#include "efenet/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "efenet/imaging.hpp"
#include "efenet/kernels.hpp"

namespace efenet {

void LossWeights::validate() const {
  for (double w : {sr, flow1, flow2})
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("loss weights must be finite and >= 0");
}

template <class T>
double charbonnier_sum(const BasicTensor<T>& pred, const BasicTensor<T>& gt, BasicTensor<T>* grad_pred,
                       double grad_scale) {
  if (pred.shape() != gt.shape()) throw std::invalid_argument("charbonnier_sum: shape mismatch");
  constexpr double eps2 = kCharbonnierEps * kCharbonnierEps;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(gt[i]);
    const double r = std::sqrt(d * d + eps2);
    sum += r;
    if (grad_pred) (*grad_pred)[i] += static_cast<T>(grad_scale * d / r);
  }
  return sum;
}

template <class T>
double warp_squared_error(const BasicTensor<T>& ref, const BasicTensor<T>& flow, const BasicTensor<T>& gt,
                          int border, BasicTensor<T>* grad_flow, double grad_scale) {
  if (!flow.shape().same_spatial(gt.shape()) || ref.channels() != gt.channels())
    throw std::invalid_argument("warp_squared_error: shape mismatch");
  if (border < 0) throw std::invalid_argument("warp_squared_error: negative border");
  BasicTensor<T> warped;
  kernels::warp_forward(ref, flow, warped);
  const int h = gt.height(), w = gt.width();
  BasicTensor<T> residual(gt.shape());
  double sum = 0.0;
  for (int c = 0; c < gt.channels(); ++c)
    for (int y = border; y < h - border; ++y)
      for (int x = border; x < w - border; ++x) {
        const double d = static_cast<double>(warped(c, y, x)) - static_cast<double>(gt(c, y, x));
        sum += d * d;
        residual(c, y, x) = static_cast<T>(2.0 * grad_scale * d);
      }
  if (grad_flow) kernels::warp_backward<T>(ref, flow, residual, nullptr, grad_flow);
  return sum;
}

template double charbonnier_sum(const Tensor&, const Tensor&, Tensor*, double);
template double charbonnier_sum(const TensorD&, const TensorD&, TensorD*, double);
template double warp_squared_error(const Tensor&, const Tensor&, const Tensor&, int, Tensor*, double);
template double warp_squared_error(const TensorD&, const TensorD&, const TensorD&, int, TensorD*, double);

double loss_sr(const Frame& pred, const Frame& gt) {
  if (pred.shape() != gt.shape()) throw std::invalid_argument("loss_sr: shape mismatch");
  return charbonnier_sum(pred.tensor(), gt.tensor());
}

double loss_sr(std::span<const Frame> preds, std::span<const Frame> gts) {
  if (preds.size() != gts.size() || preds.empty())
    throw std::invalid_argument("loss_sr: batch size mismatch or empty batch");
  double sum = 0.0;
  for (std::size_t j = 0; j < preds.size(); ++j) sum += loss_sr(preds[j], gts[j]);
  return sum / static_cast<double>(preds.size());
}

double loss_flow_steps(const Frame& ref_hr, std::span<const FlowField> flows, std::span<const Frame> gt_hr_seq,
                       int border) {
  if (flows.size() != gt_hr_seq.size()) throw std::invalid_argument("loss_flow_steps: length mismatch");
  const TensorD ref = ref_hr.tensor().cast<double>();
  double sum = 0.0;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    if (gt_hr_seq[i].shape() != ref_hr.shape())
      throw std::invalid_argument("loss_flow_steps: ground truth extent differs from reference");
    sum += warp_squared_error(ref, flows[i].tensor().cast<double>(), gt_hr_seq[i].tensor().cast<double>(), border);
  }
  return 0.5 * sum;
}

double loss_flow_refined(const Frame& ref_hr, const FlowField& refined, const Frame& gt_hr_last, int border) {
  if (gt_hr_last.shape() != ref_hr.shape())
    throw std::invalid_argument("loss_flow_refined: ground truth extent differs from reference");
  return warp_squared_error(ref_hr.tensor().cast<double>(), refined.tensor().cast<double>(),
                            gt_hr_last.tensor().cast<double>(), border);
}

double total_loss(const LossComponents& c, const LossWeights& weights) {
  weights.validate();
  for (double v : {c.sr, c.flow1, c.flow2})
    if (!std::isfinite(v)) throw std::invalid_argument("total_loss: non-finite component");
  return weights.sr * c.sr + weights.flow1 * c.flow1 + weights.flow2 * c.flow2;
}

ag::Var sr_loss_node(ag::Var pred, const Tensor& gt) {
  const double value = charbonnier_sum(pred.value(), gt);
  const ag::Var parents[] = {pred};
  return pred.graph()->make(
      Tensor(1, 1, 1, static_cast<float>(value)), parents,
      [pred, gt](ag::Graph& g, int self) {
        charbonnier_sum(pred.value(), gt, &g.grad_mut(pred.id()), g.grad(self)[0]);
      },
      value);
}

ag::Var warp_loss_node(const Tensor& ref, ag::Var flow, const Tensor& gt, int border, double factor) {
  const double value = factor * warp_squared_error(ref, flow.value(), gt, border);
  const ag::Var parents[] = {flow};
  return flow.graph()->make(
      Tensor(1, 1, 1, static_cast<float>(value)), parents,
      [ref, flow, gt, border, factor](ag::Graph& g, int self) {
        warp_squared_error(ref, flow.value(), gt, border, &g.grad_mut(flow.id()), factor * g.grad(self)[0]);
      },
      value);
}

}  // namespace efenet
