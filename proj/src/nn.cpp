#include "efenet/nn.hpp"

#include <cmath>

namespace efenet::nn {

ag::Var ConvLayer::operator()(ag::Graph& g, ag::Var x) {
  ag::Var w = g.param(weight);
  ag::Var b = g.param(bias);
  return transposed ? ag::conv_transpose2d(x, w, b, geom) : ag::conv2d(x, w, b, geom);
}

ag::Var ConvLayer::operator()(ag::Graph& g, ag::Var x) const {
  ag::Var w = g.constant(weight.value);
  ag::Var b = g.constant(bias.value);
  return transposed ? ag::conv_transpose2d(x, w, b, geom) : ag::conv2d(x, w, b, geom);
}

ConvLayer conv3x3(std::string name, int cin, int cout, int stride) {
  ConvLayer l;
  l.geom = {cin, cout, 3, stride, 1};
  l.weight = ag::Parameter(name + ".weight", Shape{1, 1, l.geom.weight_count()});
  l.bias = ag::Parameter(name + ".bias", Shape{1, 1, cout});
  return l;
}

ConvLayer deconv4x4(std::string name, int cin, int cout) {
  ConvLayer l;
  l.geom = {cin, cout, 4, 2, 1};
  l.transposed = true;
  l.weight = ag::Parameter(name + ".weight", Shape{1, 1, l.geom.weight_count()});
  l.bias = ag::Parameter(name + ".bias", Shape{1, 1, cout});
  return l;
}

void init_kaiming(ConvLayer& layer, std::mt19937_64& rng) {
  const auto& g = layer.geom;
  // A stride-2 4x4 transposed conv feeds each output from cin * 4 taps.
  const double fan_in = layer.transposed ? g.cin * (g.k / g.stride) * (g.k / g.stride)
                                         : static_cast<double>(g.cin) * g.k * g.k;
  const double bound = std::sqrt(6.0 / ((1.0 + kLeakySlope * kLeakySlope) * fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (float& w : layer.weight.value.span()) w = static_cast<float>(dist(rng));
  layer.bias.value.fill(0.0f);
  layer.weight.zero_grad();
  layer.bias.zero_grad();
}

void init_zero(ConvLayer& layer) {
  layer.weight.value.fill(0.0f);
  layer.bias.value.fill(0.0f);
  layer.weight.zero_grad();
  layer.bias.zero_grad();
}

std::vector<ag::Parameter*> LayerStack::parameters() {
  std::vector<ag::Parameter*> out;
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const ag::Parameter*> LayerStack::parameters() const {
  std::vector<const ag::Parameter*> out;
  for (const auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

void LayerStack::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

void LayerStack::initialize(std::uint64_t seed, HeadInit head) {
  std::mt19937_64 rng(seed);
  for (auto& l : layers) init_kaiming(l, rng);
  if (head == HeadInit::Zero && !layers.empty()) init_zero(layers.back());
}

void leaky_relu_inplace(Tensor& t) {
  for (float& v : t.span()) v = v > 0.0f ? v : v * kLeakySlope;
}

}  // namespace efenet::nn
