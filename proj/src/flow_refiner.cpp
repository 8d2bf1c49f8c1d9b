#include "efenet/flow_refiner.hpp"

#include <stdexcept>

namespace efenet {
namespace {

constexpr int kWidths[4] = {32, 64, 96, 128};

template <class Params>
ag::Var forward(ag::Graph& g, Params& params, std::span<const ag::Var> flows) {
  if (static_cast<int>(flows.size()) != params.sequence_length)
    throw std::invalid_argument("refine_flows: expected " + std::to_string(params.sequence_length) +
                                " flows, got " + std::to_string(flows.size()));
  const Shape s = flows.front().shape();
  for (const ag::Var& f : flows) {
    if (f.shape() != s || f.shape().c != 2) throw std::invalid_argument("refine_flows: inconsistent flow dims");
  }
  if (s.h % 16 || s.w % 16) throw std::invalid_argument("refine_flows: extent not divisible by 16");

  auto& net = params.net;
  const auto act = [](ag::Var v) { return ag::leaky_relu(v, nn::kLeakySlope); };
  const auto cat = [](ag::Var l, ag::Var r) {
    const ag::Var v[] = {l, r};
    return ag::concat(v);
  };
  ag::Var x = flows.size() == 1 ? flows.front() : ag::concat(flows);
  ag::Var d1 = act(net[0](g, x));
  ag::Var d2 = act(net[1](g, d1));
  ag::Var d3 = act(net[2](g, d2));
  ag::Var d4 = act(net[3](g, d3));
  ag::Var u = cat(act(net[4](g, d4)), d3);
  u = cat(act(net[5](g, u)), d2);
  u = cat(act(net[6](g, u)), d1);
  u = cat(act(net[7](g, u)), x);
  ag::Var delta = net[8](g, u);
  return params.residual ? ag::add(flows.back(), delta) : delta;
}

}  // namespace

FlowRefinerParams FlowRefinerParams::create(int sequence_length, std::uint64_t seed, nn::HeadInit head,
                                            bool residual) {
  if (sequence_length < 1) throw std::invalid_argument("FlowRefinerParams: sequence length must be >= 1");
  FlowRefinerParams p;
  p.sequence_length = sequence_length;
  p.residual = residual;
  const int in = 2 * sequence_length;
  auto& L = p.net.layers;
  L.push_back(nn::conv3x3("refine.down1", in, kWidths[0], 2));
  L.push_back(nn::conv3x3("refine.down2", kWidths[0], kWidths[1], 2));
  L.push_back(nn::conv3x3("refine.down3", kWidths[1], kWidths[2], 2));
  L.push_back(nn::conv3x3("refine.down4", kWidths[2], kWidths[3], 2));
  L.push_back(nn::deconv4x4("refine.up4", kWidths[3], kWidths[2]));
  L.push_back(nn::deconv4x4("refine.up3", 2 * kWidths[2], kWidths[1]));
  L.push_back(nn::deconv4x4("refine.up2", 2 * kWidths[1], kWidths[0]));
  L.push_back(nn::deconv4x4("refine.up1", 2 * kWidths[0], kWidths[0]));
  L.push_back(nn::conv3x3("refine.head", kWidths[0] + in, 2, 1));
  p.net.initialize(seed, head);
  return p;
}

ag::Var refine_flows(ag::Graph& g, FlowRefinerParams& params, std::span<const ag::Var> flows) {
  if (flows.empty()) throw std::invalid_argument("refine_flows: empty flow list");
  return forward(g, params, flows);
}

ag::Var refine_flows(ag::Graph& g, const FlowRefinerParams& params, std::span<const ag::Var> flows) {
  if (flows.empty()) throw std::invalid_argument("refine_flows: empty flow list");
  return forward(g, params, flows);
}

FlowField refine_flows(std::span<const FlowField> flows, const FlowRefinerParams& params) {
  if (flows.empty()) throw std::invalid_argument("refine_flows: empty flow list");
  ag::Graph g;
  std::vector<ag::Var> vars;
  for (const FlowField& f : flows) vars.push_back(g.constant(f.tensor()));
  return FlowField(forward(g, params, std::span<const ag::Var>(vars)).value());
}

}  // namespace efenet
