#include "efenet/flow_estimator.hpp"

#include <stdexcept>

#include "efenet/imaging.hpp"

namespace efenet {
namespace {

constexpr int kWidths[4] = {16, 32, 64, 96};
constexpr int kFuseWidth = 16;

Tensor centered(const Tensor& t) {
  Tensor out = t;
  for (float& v : out.span()) v -= 0.5f;
  return out;
}

template <class Params>
ag::Var forward(ag::Graph& g, Params& params, const Tensor& ref, const Tensor& up) {
  if (!ref.shape().same_spatial(up.shape()))
    throw std::invalid_argument("estimate_flow: spatial mismatch " + to_string(ref.shape()) + " vs " +
                                to_string(up.shape()));
  if (ref.channels() != up.channels() || ref.channels() != params.image_channels)
    throw std::invalid_argument("estimate_flow: channel mismatch");
  if (ref.height() % kFlowNetMultiple || ref.width() % kFlowNetMultiple)
    throw std::invalid_argument("estimate_flow: extent not divisible by 16");

  const Tensor a = centered(ref), b = centered(up);
  const Tensor* parts[] = {&a, &b};
  ag::Var x = g.constant(concat_channels<float>(parts));
  auto& net = params.net;
  const auto act = [](ag::Var v) { return ag::leaky_relu(v, nn::kLeakySlope); };
  const auto cat = [](ag::Var l, ag::Var r) {
    const ag::Var v[] = {l, r};
    return ag::concat(v);
  };

  ag::Var d1 = act(net[0](g, x));
  ag::Var d2 = act(net[1](g, d1));
  ag::Var d3 = act(net[2](g, d2));
  ag::Var d4 = act(net[3](g, d3));
  ag::Var u = cat(act(net[4](g, d4)), d3);
  u = cat(act(net[5](g, u)), d2);
  u = cat(act(net[6](g, u)), d1);
  u = cat(act(net[7](g, u)), x);
  ag::Var f = act(net[8](g, u));
  return net[9](g, f);
}

}  // namespace

FlowEstimatorParams FlowEstimatorParams::create(int image_channels, std::uint64_t seed,
                                                nn::HeadInit head) {
  if (image_channels != 1 && image_channels != 3)
    throw std::invalid_argument("FlowEstimatorParams: channels must be 1 or 3");
  FlowEstimatorParams p;
  p.image_channels = image_channels;
  const int in = 2 * image_channels;
  auto& L = p.net.layers;
  L.push_back(nn::conv3x3("flow.down1", in, kWidths[0], 2));
  L.push_back(nn::conv3x3("flow.down2", kWidths[0], kWidths[1], 2));
  L.push_back(nn::conv3x3("flow.down3", kWidths[1], kWidths[2], 2));
  L.push_back(nn::conv3x3("flow.down4", kWidths[2], kWidths[3], 2));
  L.push_back(nn::deconv4x4("flow.up4", kWidths[3], kWidths[2]));
  L.push_back(nn::deconv4x4("flow.up3", 2 * kWidths[2], kWidths[1]));
  L.push_back(nn::deconv4x4("flow.up2", 2 * kWidths[1], kWidths[0]));
  L.push_back(nn::deconv4x4("flow.up1", 2 * kWidths[0], kWidths[0]));
  L.push_back(nn::conv3x3("flow.fuse", kWidths[0] + in, kFuseWidth, 1));
  L.push_back(nn::conv3x3("flow.head", kFuseWidth, 2, 1));
  p.net.initialize(seed, head);
  return p;
}

ag::Var estimate_flow(ag::Graph& g, FlowEstimatorParams& params, const Tensor& ref_hr,
                      const Tensor& lr_upsampled) {
  return forward(g, params, ref_hr, lr_upsampled);
}

ag::Var estimate_flow(ag::Graph& g, const FlowEstimatorParams& params, const Tensor& ref_hr,
                      const Tensor& lr_upsampled) {
  return forward(g, params, ref_hr, lr_upsampled);
}

FlowField estimate_flow(const Frame& ref_hr, const Frame& lr_upsampled,
                        const FlowEstimatorParams& params) {
  if (!ref_hr.shape().same_spatial(lr_upsampled.shape()))
    throw std::invalid_argument("estimate_flow: spatial mismatch");
  const int h = ref_hr.height(), w = ref_hr.width();
  ag::Graph g;
  ag::Var flow = forward(g, params, pad_reflect(ref_hr.tensor(), kFlowNetMultiple),
                         pad_reflect(lr_upsampled.tensor(), kFlowNetMultiple));
  return FlowField(crop(flow.value(), h, w));
}

std::vector<FlowField> estimate_flows_sequence(const Frame& ref_hr, std::span<const Frame> lr_sequence,
                                               const FlowEstimatorParams& params) {
  if (lr_sequence.empty()) throw std::invalid_argument("estimate_flows_sequence: empty sequence");
  const Shape lr = lr_sequence.front().shape();
  for (const Frame& f : lr_sequence)
    if (f.shape() != lr) throw std::invalid_argument("estimate_flows_sequence: inconsistent LR sizes");
  if (ref_hr.height() != 4 * lr.h || ref_hr.width() != 4 * lr.w)
    throw std::invalid_argument("estimate_flows_sequence: reference must be 4x the LR extent");
  std::vector<FlowField> flows;
  flows.reserve(lr_sequence.size());
  for (const Frame& f : lr_sequence) flows.push_back(estimate_flow(ref_hr, bicubic_resample(f, 4.0), params));
  return flows;
}

}  // namespace efenet
