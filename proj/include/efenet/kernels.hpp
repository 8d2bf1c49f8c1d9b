#pragma once

// Compute kernels behind the network and imaging layers. Every kernel in
// efenet::kernels has an OpenMP-parallel implementation; efenet::kernels::reference
// holds plain serial versions that the tests compare against and the benchmark
// times side by side.
//
// Gradient kernels accumulate (+=) into their outputs.

#include <span>

#include "efenet/tensor.hpp"

namespace efenet::kernels {

/// Square-kernel convolution geometry.
struct ConvGeom {
  int cin = 0;
  int cout = 0;
  int k = 3;
  int stride = 1;
  int pad = 1;

  int out_size(int in) const { return (in + 2 * pad - k) / stride + 1; }
  /// Output extent of the transposed convolution with the same geometry.
  int transposed_out_size(int in) const { return (in - 1) * stride - 2 * pad + k; }
  int weight_count() const { return cin * cout * k * k; }
};

// Conv2d weights are laid out [cout][cin][k][k]; transposed conv weights
// [cin][cout][k][k].

void conv2d_forward(const Tensor& x, std::span<const float> weight, std::span<const float> bias,
                    const ConvGeom& g, Tensor& y);
void conv2d_backward(const Tensor& x, std::span<const float> weight, const Tensor& dy,
                     const ConvGeom& g, Tensor* dx, std::span<float> dweight,
                     std::span<float> dbias);

void conv_transpose2d_forward(const Tensor& x, std::span<const float> weight,
                              std::span<const float> bias, const ConvGeom& g, Tensor& y);
void conv_transpose2d_backward(const Tensor& x, std::span<const float> weight, const Tensor& dy,
                               const ConvGeom& g, Tensor* dx, std::span<float> dweight,
                               std::span<float> dbias);

/// Bilinear backward warp with border clamping. out has the flow's spatial
/// extent and the source's channel count.
template <class T>
void warp_forward(const BasicTensor<T>& src, const BasicTensor<T>& flow, BasicTensor<T>& out);
template <class T>
void warp_backward(const BasicTensor<T>& src, const BasicTensor<T>& flow,
                   const BasicTensor<T>& dout, BasicTensor<T>* dsrc, BasicTensor<T>* dflow);

/// Separable Keys-cubic resampling (a = -0.5). The source coordinate of output
/// pixel x is (x + 0.5) / factor - 0.5; for factor < 1 the kernel is widened by
/// 1 / factor. Output is clamped to [0, 1].
Tensor resample_bicubic(const Tensor& src, int out_h, int out_w, double factor);

double keys_cubic(double x);

namespace reference {

void conv2d_forward(const Tensor& x, std::span<const float> weight, std::span<const float> bias,
                    const ConvGeom& g, Tensor& y);
void conv2d_backward(const Tensor& x, std::span<const float> weight, const Tensor& dy,
                     const ConvGeom& g, Tensor* dx, std::span<float> dweight,
                     std::span<float> dbias);
void conv_transpose2d_forward(const Tensor& x, std::span<const float> weight,
                              std::span<const float> bias, const ConvGeom& g, Tensor& y);
void conv_transpose2d_backward(const Tensor& x, std::span<const float> weight, const Tensor& dy,
                               const ConvGeom& g, Tensor* dx, std::span<float> dweight,
                               std::span<float> dbias);

template <class T>
void warp_forward(const BasicTensor<T>& src, const BasicTensor<T>& flow, BasicTensor<T>& out);
template <class T>
void warp_backward(const BasicTensor<T>& src, const BasicTensor<T>& flow,
                   const BasicTensor<T>& dout, BasicTensor<T>* dsrc, BasicTensor<T>* dflow);

Tensor resample_bicubic(const Tensor& src, int out_h, int out_w, double factor);

}  // namespace reference
}  // namespace efenet::kernels
