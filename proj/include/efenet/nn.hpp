#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "efenet/autograd.hpp"

namespace efenet::nn {

inline constexpr float kLeakySlope = 0.1f;

enum class HeadInit { Zero, Random };

/// Convolution or transposed convolution with bias.
struct ConvLayer {
  ag::Parameter weight;
  ag::Parameter bias;
  kernels::ConvGeom geom;
  bool transposed = false;

  /// Trainable application: gradients reach weight.grad and bias.grad.
  ag::Var operator()(ag::Graph& g, ag::Var x);
  /// Frozen application: weights enter the graph as constants.
  ag::Var operator()(ag::Graph& g, ag::Var x) const;
};

/// 3x3 convolution with padding 1 and the given stride.
ConvLayer conv3x3(std::string name, int cin, int cout, int stride);
/// 4x4 stride-2 transposed convolution (exact 2x upsampling).
ConvLayer deconv4x4(std::string name, int cin, int cout);

/// Kaiming-uniform weights for leaky-rectified layers, zero bias.
void init_kaiming(ConvLayer& layer, std::mt19937_64& rng);
void init_zero(ConvLayer& layer);

/// Ordered collection of layers; the order is the checkpoint order.
struct LayerStack {
  std::vector<ConvLayer> layers;

  ConvLayer& operator[](std::size_t i) { return layers[i]; }
  const ConvLayer& operator[](std::size_t i) const { return layers[i]; }
  std::vector<ag::Parameter*> parameters();
  std::vector<const ag::Parameter*> parameters() const;
  void zero_grad();
  /// Kaiming init everywhere; the last layer is zeroed when head == Zero.
  void initialize(std::uint64_t seed, HeadInit head);
};

/// Applies leaky ReLU in place (inference path).
void leaky_relu_inplace(Tensor& t);

}  // namespace efenet::nn
