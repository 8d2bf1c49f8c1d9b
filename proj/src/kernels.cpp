#include "efenet/kernels.hpp"

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace efenet::kernels {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// Lowered patch matrix: row (ci, ky, kx), column (oy, ox).
void im2col(const float* src, int c, int h, int w, int k, int stride, int pad, int ho, int wo,
            float* col) {
  const int rows = c * k * k;
#pragma omp parallel for schedule(static) if (rows * ho * wo > 32768)
  for (int r = 0; r < rows; ++r) {
    const int ci = r / (k * k);
    const int ky = (r / k) % k;
    const int kx = r % k;
    const float* plane = src + static_cast<std::size_t>(ci) * h * w;
    float* out = col + static_cast<std::size_t>(r) * ho * wo;
    for (int oy = 0; oy < ho; ++oy) {
      const int iy = oy * stride - pad + ky;
      float* row = out + static_cast<std::size_t>(oy) * wo;
      if (iy < 0 || iy >= h) {
        std::fill(row, row + wo, 0.0f);
        continue;
      }
      const float* in = plane + static_cast<std::size_t>(iy) * w;
      for (int ox = 0; ox < wo; ++ox) {
        const int ix = ox * stride - pad + kx;
        row[ox] = (ix >= 0 && ix < w) ? in[ix] : 0.0f;
      }
    }
  }
}

// Adjoint of im2col; accumulates into dst. Parallel over channels so each
// output plane is written by exactly one thread.
void col2im(const float* col, int c, int h, int w, int k, int stride, int pad, int ho, int wo,
            float* dst) {
#pragma omp parallel for schedule(static) if (c * k * k * ho * wo > 32768)
  for (int ci = 0; ci < c; ++ci) {
    float* plane = dst + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* in = col + (static_cast<std::size_t>(ci) * k * k + ky * k + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          float* row = plane + static_cast<std::size_t>(iy) * w;
          const float* src = in + static_cast<std::size_t>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) row[ix] += src[ox];
          }
        }
      }
    }
  }
}

void check_conv_input(const Tensor& x, const ConvGeom& g, std::span<const float> weight) {
  if (x.channels() != g.cin) throw std::invalid_argument("conv: input channel mismatch");
  if (static_cast<int>(weight.size()) != g.weight_count())
    throw std::invalid_argument("conv: weight size mismatch");
}

void add_bias(Tensor& y, std::span<const float> bias) {
  if (bias.empty()) return;
  const std::size_t plane = y.shape().plane();
#pragma omp parallel for schedule(static) if (y.size() > 65536)
  for (int c = 0; c < y.channels(); ++c) {
    float* p = y.data() + plane * c;
    const float b = bias[c];
    for (std::size_t i = 0; i < plane; ++i) p[i] += b;
  }
}

void accumulate_bias_grad(const Tensor& dy, std::span<float> dbias) {
  if (dbias.empty()) return;
  const std::size_t plane = dy.shape().plane();
  for (int c = 0; c < dy.channels(); ++c) {
    const float* p = dy.data() + plane * c;
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += p[i];
    dbias[c] += static_cast<float>(s);
  }
}

}  // namespace

void conv2d_forward(const Tensor& x, std::span<const float> weight, std::span<const float> bias,
                    const ConvGeom& g, Tensor& y) {
  check_conv_input(x, g, weight);
  const int ho = g.out_size(x.height());
  const int wo = g.out_size(x.width());
  const int kk = g.cin * g.k * g.k;
  const int n = ho * wo;
  std::vector<float> col(static_cast<std::size_t>(kk) * n);
  im2col(x.data(), g.cin, x.height(), x.width(), g.k, g.stride, g.pad, ho, wo, col.data());
  y = Tensor(g.cout, ho, wo);
  MapMat out(y.data(), g.cout, n);
  out.noalias() = ConstMapMat(weight.data(), g.cout, kk) * ConstMapMat(col.data(), kk, n);
  add_bias(y, bias);
}

void conv2d_backward(const Tensor& x, std::span<const float> weight, const Tensor& dy,
                     const ConvGeom& g, Tensor* dx, std::span<float> dweight,
                     std::span<float> dbias) {
  check_conv_input(x, g, weight);
  const int ho = dy.height();
  const int wo = dy.width();
  const int kk = g.cin * g.k * g.k;
  const int n = ho * wo;
  ConstMapMat dout(dy.data(), g.cout, n);
  std::vector<float> col(static_cast<std::size_t>(kk) * n);
  if (!dweight.empty()) {
    im2col(x.data(), g.cin, x.height(), x.width(), g.k, g.stride, g.pad, ho, wo, col.data());
    MapMat(dweight.data(), g.cout, kk).noalias() += dout * ConstMapMat(col.data(), kk, n).transpose();
  }
  accumulate_bias_grad(dy, dbias);
  if (dx) {
    MapMat dcol(col.data(), kk, n);
    dcol.noalias() = ConstMapMat(weight.data(), g.cout, kk).transpose() * dout;
    col2im(col.data(), g.cin, x.height(), x.width(), g.k, g.stride, g.pad, ho, wo, dx->data());
  }
}

void conv_transpose2d_forward(const Tensor& x, std::span<const float> weight,
                              std::span<const float> bias, const ConvGeom& g, Tensor& y) {
  check_conv_input(x, g, weight);
  const int hi = x.height();
  const int wi = x.width();
  const int ho = g.transposed_out_size(hi);
  const int wo = g.transposed_out_size(wi);
  const int kk = g.cout * g.k * g.k;
  const int n = hi * wi;
  std::vector<float> col(static_cast<std::size_t>(kk) * n);
  MapMat(col.data(), kk, n).noalias() =
      ConstMapMat(weight.data(), g.cin, kk).transpose() * ConstMapMat(x.data(), g.cin, n);
  y = Tensor(g.cout, ho, wo);
  col2im(col.data(), g.cout, ho, wo, g.k, g.stride, g.pad, hi, wi, y.data());
  add_bias(y, bias);
}

void conv_transpose2d_backward(const Tensor& x, std::span<const float> weight, const Tensor& dy,
                               const ConvGeom& g, Tensor* dx, std::span<float> dweight,
                               std::span<float> dbias) {
  check_conv_input(x, g, weight);
  const int hi = x.height();
  const int wi = x.width();
  const int kk = g.cout * g.k * g.k;
  const int n = hi * wi;
  std::vector<float> col(static_cast<std::size_t>(kk) * n);
  im2col(dy.data(), g.cout, dy.height(), dy.width(), g.k, g.stride, g.pad, hi, wi, col.data());
  ConstMapMat dcol(col.data(), kk, n);
  if (!dweight.empty())
    MapMat(dweight.data(), g.cin, kk).noalias() += ConstMapMat(x.data(), g.cin, n) * dcol.transpose();
  accumulate_bias_grad(dy, dbias);
  if (dx) MapMat(dx->data(), g.cin, n).noalias() += ConstMapMat(weight.data(), g.cin, kk) * dcol;
}

// ---------------------------------------------------------------------------
// Warp

namespace {

template <class T>
struct Tap {
  int x0, x1, y0, y1;
  T ax, ay;
  bool clamped_x, clamped_y;
};

template <class T>
inline Tap<T> bilinear_tap(T sx, T sy, int w, int h) {
  Tap<T> t{};
  const T maxx = static_cast<T>(w - 1);
  const T maxy = static_cast<T>(h - 1);
  t.clamped_x = sx < T(0) || sx > maxx;
  t.clamped_y = sy < T(0) || sy > maxy;
  const T cx = std::clamp(sx, T(0), maxx);
  const T cy = std::clamp(sy, T(0), maxy);
  t.x0 = static_cast<int>(std::floor(cx));
  t.y0 = static_cast<int>(std::floor(cy));
  t.x1 = std::min(t.x0 + 1, w - 1);
  t.y1 = std::min(t.y0 + 1, h - 1);
  t.ax = cx - static_cast<T>(t.x0);
  t.ay = cy - static_cast<T>(t.y0);
  return t;
}

template <class T>
void check_warp(const BasicTensor<T>& src, const BasicTensor<T>& flow) {
  if (flow.channels() != 2) throw std::invalid_argument("warp: flow must have 2 channels");
  if (src.height() < 1 || src.width() < 1) throw std::invalid_argument("warp: empty source");
}

template <class T>
void warp_forward_impl(const BasicTensor<T>& src, const BasicTensor<T>& flow, BasicTensor<T>& out,
                       bool parallel) {
  check_warp(src, flow);
  const int h = flow.height(), w = flow.width(), c = src.channels();
  const int hs = src.height(), ws = src.width();
  out = BasicTensor<T>(c, h, w);
  const std::size_t splane = src.shape().plane();
  const std::size_t oplane = out.shape().plane();
  const T* fx = flow.channel(0).data();
  const T* fy = flow.channel(1).data();
#pragma omp parallel for schedule(static) if (parallel && static_cast<std::size_t>(h) * w * c > 16384)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const Tap<T> t = bilinear_tap<T>(static_cast<T>(x) + fx[i], static_cast<T>(y) + fy[i], ws, hs);
      const std::size_t i00 = static_cast<std::size_t>(t.y0) * ws + t.x0;
      const std::size_t i01 = static_cast<std::size_t>(t.y0) * ws + t.x1;
      const std::size_t i10 = static_cast<std::size_t>(t.y1) * ws + t.x0;
      const std::size_t i11 = static_cast<std::size_t>(t.y1) * ws + t.x1;
      const bool exact = t.ax == T(0) && t.ay == T(0);
      for (int ch = 0; ch < c; ++ch) {
        const T* p = src.data() + splane * ch;
        T v;
        if (exact) {
          v = p[i00];
        } else {
          // Lerp form keeps constant regions exactly constant.
          const T top = p[i00] + t.ax * (p[i01] - p[i00]);
          const T bottom = p[i10] + t.ax * (p[i11] - p[i10]);
          v = top + t.ay * (bottom - top);
        }
        out.data()[oplane * ch + i] = v;
      }
    }
  }
}

template <class T>
void warp_backward_impl(const BasicTensor<T>& src, const BasicTensor<T>& flow,
                        const BasicTensor<T>& dout, BasicTensor<T>* dsrc, BasicTensor<T>* dflow,
                        bool parallel) {
  check_warp(src, flow);
  const int h = flow.height(), w = flow.width(), c = src.channels();
  const int hs = src.height(), ws = src.width();
  const std::size_t splane = src.shape().plane();
  const std::size_t oplane = static_cast<std::size_t>(h) * w;
  const T* fx = flow.channel(0).data();
  const T* fy = flow.channel(1).data();
  const bool big = parallel && oplane * c > 16384;

  if (dflow) {
#pragma omp parallel for schedule(static) if (big)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const Tap<T> t = bilinear_tap<T>(static_cast<T>(x) + fx[i], static_cast<T>(y) + fy[i], ws, hs);
        if (t.clamped_x && t.clamped_y) continue;
        const std::size_t i00 = static_cast<std::size_t>(t.y0) * ws + t.x0;
        const std::size_t i01 = static_cast<std::size_t>(t.y0) * ws + t.x1;
        const std::size_t i10 = static_cast<std::size_t>(t.y1) * ws + t.x0;
        const std::size_t i11 = static_cast<std::size_t>(t.y1) * ws + t.x1;
        T gx = 0, gy = 0;
        for (int ch = 0; ch < c; ++ch) {
          const T* p = src.data() + splane * ch;
          const T g = dout.data()[oplane * ch + i];
          gx += g * ((T(1) - t.ay) * (p[i01] - p[i00]) + t.ay * (p[i11] - p[i10]));
          gy += g * ((T(1) - t.ax) * (p[i10] - p[i00]) + t.ax * (p[i11] - p[i01]));
        }
        if (!t.clamped_x) dflow->data()[i] += gx;
        if (!t.clamped_y) dflow->data()[oplane + i] += gy;
      }
    }
  }

  if (dsrc) {
#pragma omp parallel for schedule(static) if (big && c > 1)
    for (int ch = 0; ch < c; ++ch) {
      T* d = dsrc->data() + splane * ch;
      const T* g = dout.data() + oplane * ch;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const Tap<T> t = bilinear_tap<T>(static_cast<T>(x) + fx[i], static_cast<T>(y) + fy[i], ws, hs);
          const T gi = g[i];
          d[static_cast<std::size_t>(t.y0) * ws + t.x0] += (T(1) - t.ax) * (T(1) - t.ay) * gi;
          d[static_cast<std::size_t>(t.y0) * ws + t.x1] += t.ax * (T(1) - t.ay) * gi;
          d[static_cast<std::size_t>(t.y1) * ws + t.x0] += (T(1) - t.ax) * t.ay * gi;
          d[static_cast<std::size_t>(t.y1) * ws + t.x1] += t.ax * t.ay * gi;
        }
      }
    }
  }
}

}  // namespace

template <class T>
void warp_forward(const BasicTensor<T>& src, const BasicTensor<T>& flow, BasicTensor<T>& out) {
  warp_forward_impl(src, flow, out, true);
}
template <class T>
void warp_backward(const BasicTensor<T>& src, const BasicTensor<T>& flow,
                   const BasicTensor<T>& dout, BasicTensor<T>* dsrc, BasicTensor<T>* dflow) {
  warp_backward_impl(src, flow, dout, dsrc, dflow, true);
}

template void warp_forward<float>(const Tensor&, const Tensor&, Tensor&);
template void warp_forward<double>(const TensorD&, const TensorD&, TensorD&);
template void warp_backward<float>(const Tensor&, const Tensor&, const Tensor&, Tensor*, Tensor*);
template void warp_backward<double>(const TensorD&, const TensorD&, const TensorD&, TensorD*,
                                    TensorD*);

// ---------------------------------------------------------------------------
// Bicubic

double keys_cubic(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  std::vector<int> offset;  // first entry index per output sample
  std::vector<int> count;
  std::vector<int> index;
  std::vector<double> weight;
};

Taps make_taps(int in, int out, double factor) {
  Taps t;
  const double scale = std::min(factor, 1.0);
  const double support = 2.0 / scale;
  t.offset.resize(out);
  t.count.resize(out);
  for (int o = 0; o < out; ++o) {
    const double center = (o + 0.5) / factor - 0.5;
    const int lo = static_cast<int>(std::ceil(center - support));
    const int hi = static_cast<int>(std::floor(center + support));
    t.offset[o] = static_cast<int>(t.index.size());
    double sum = 0.0;
    const std::size_t first = t.weight.size();
    for (int i = lo; i <= hi; ++i) {
      const double wgt = keys_cubic((i - center) * scale);
      if (wgt == 0.0) continue;
      t.index.push_back(std::clamp(i, 0, in - 1));
      t.weight.push_back(wgt);
      sum += wgt;
    }
    for (std::size_t j = first; j < t.weight.size(); ++j) t.weight[j] /= sum;
    t.count[o] = static_cast<int>(t.weight.size() - first);
  }
  return t;
}

Tensor resample_impl(const Tensor& src, int out_h, int out_w, double factor, bool parallel) {
  if (!(factor > 0.0)) throw std::invalid_argument("resample: factor must be positive");
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resample: output dimension < 1");
  const int c = src.channels(), h = src.height(), w = src.width();
  const Taps tx = make_taps(w, out_w, factor);
  const Taps ty = make_taps(h, out_h, factor);
  std::vector<double> tmp(static_cast<std::size_t>(c) * h * out_w);
  const std::size_t work = static_cast<std::size_t>(c) * h * out_w;
#pragma omp parallel for collapse(2) schedule(static) if (parallel && work > 16384)
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      const float* row = src.data() + (static_cast<std::size_t>(ch) * h + y) * w;
      double* dst = tmp.data() + (static_cast<std::size_t>(ch) * h + y) * out_w;
      for (int x = 0; x < out_w; ++x) {
        double s = 0.0;
        for (int k = 0; k < tx.count[x]; ++k)
          s += tx.weight[tx.offset[x] + k] * row[tx.index[tx.offset[x] + k]];
        dst[x] = s;
      }
    }
  }
  Tensor out(c, out_h, out_w);
#pragma omp parallel for collapse(2) schedule(static) if (parallel && work > 16384)
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < out_h; ++y) {
      float* dst = out.data() + (static_cast<std::size_t>(ch) * out_h + y) * out_w;
      for (int x = 0; x < out_w; ++x) {
        double s = 0.0;
        for (int k = 0; k < ty.count[y]; ++k)
          s += ty.weight[ty.offset[y] + k] *
               tmp[(static_cast<std::size_t>(ch) * h + ty.index[ty.offset[y] + k]) * out_w + x];
        dst[x] = static_cast<float>(std::clamp(s, 0.0, 1.0));
      }
    }
  }
  return out;
}

}  // namespace

Tensor resample_bicubic(const Tensor& src, int out_h, int out_w, double factor) {
  return resample_impl(src, out_h, out_w, factor, true);
}

// ---------------------------------------------------------------------------
// Serial reference kernels

namespace reference {

void conv2d_forward(const Tensor& x, std::span<const float> weight, std::span<const float> bias,
                    const ConvGeom& g, Tensor& y) {
  check_conv_input(x, g, weight);
  const int ho = g.out_size(x.height()), wo = g.out_size(x.width());
  y = Tensor(g.cout, ho, wo);
  for (int co = 0; co < g.cout; ++co)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        double s = bias.empty() ? 0.0 : bias[co];
        for (int ci = 0; ci < g.cin; ++ci)
          for (int ky = 0; ky < g.k; ++ky)
            for (int kx = 0; kx < g.k; ++kx) {
              const int iy = oy * g.stride - g.pad + ky, ix = ox * g.stride - g.pad + kx;
              if (iy < 0 || iy >= x.height() || ix < 0 || ix >= x.width()) continue;
              s += static_cast<double>(weight[((co * g.cin + ci) * g.k + ky) * g.k + kx]) *
                   x(ci, iy, ix);
            }
        y(co, oy, ox) = static_cast<float>(s);
      }
}

void conv2d_backward(const Tensor& x, std::span<const float> weight, const Tensor& dy,
                     const ConvGeom& g, Tensor* dx, std::span<float> dweight,
                     std::span<float> dbias) {
  check_conv_input(x, g, weight);
  for (int co = 0; co < g.cout; ++co)
    for (int oy = 0; oy < dy.height(); ++oy)
      for (int ox = 0; ox < dy.width(); ++ox) {
        const float gy = dy(co, oy, ox);
        if (!dbias.empty()) dbias[co] += gy;
        for (int ci = 0; ci < g.cin; ++ci)
          for (int ky = 0; ky < g.k; ++ky)
            for (int kx = 0; kx < g.k; ++kx) {
              const int iy = oy * g.stride - g.pad + ky, ix = ox * g.stride - g.pad + kx;
              if (iy < 0 || iy >= x.height() || ix < 0 || ix >= x.width()) continue;
              const int wi = ((co * g.cin + ci) * g.k + ky) * g.k + kx;
              if (!dweight.empty()) dweight[wi] += gy * x(ci, iy, ix);
              if (dx) (*dx)(ci, iy, ix) += gy * weight[wi];
            }
      }
}

void conv_transpose2d_forward(const Tensor& x, std::span<const float> weight,
                              std::span<const float> bias, const ConvGeom& g, Tensor& y) {
  check_conv_input(x, g, weight);
  const int ho = g.transposed_out_size(x.height()), wo = g.transposed_out_size(x.width());
  y = Tensor(g.cout, ho, wo);
  for (int co = 0; co < g.cout; ++co)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) y(co, oy, ox) = bias.empty() ? 0.0f : bias[co];
  for (int ci = 0; ci < g.cin; ++ci)
    for (int iy = 0; iy < x.height(); ++iy)
      for (int ix = 0; ix < x.width(); ++ix)
        for (int co = 0; co < g.cout; ++co)
          for (int ky = 0; ky < g.k; ++ky)
            for (int kx = 0; kx < g.k; ++kx) {
              const int oy = iy * g.stride - g.pad + ky, ox = ix * g.stride - g.pad + kx;
              if (oy < 0 || oy >= ho || ox < 0 || ox >= wo) continue;
              y(co, oy, ox) += x(ci, iy, ix) * weight[((ci * g.cout + co) * g.k + ky) * g.k + kx];
            }
}

void conv_transpose2d_backward(const Tensor& x, std::span<const float> weight, const Tensor& dy,
                               const ConvGeom& g, Tensor* dx, std::span<float> dweight,
                               std::span<float> dbias) {
  check_conv_input(x, g, weight);
  const int ho = dy.height(), wo = dy.width();
  if (!dbias.empty())
    for (int co = 0; co < g.cout; ++co)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) dbias[co] += dy(co, oy, ox);
  for (int ci = 0; ci < g.cin; ++ci)
    for (int iy = 0; iy < x.height(); ++iy)
      for (int ix = 0; ix < x.width(); ++ix)
        for (int co = 0; co < g.cout; ++co)
          for (int ky = 0; ky < g.k; ++ky)
            for (int kx = 0; kx < g.k; ++kx) {
              const int oy = iy * g.stride - g.pad + ky, ox = ix * g.stride - g.pad + kx;
              if (oy < 0 || oy >= ho || ox < 0 || ox >= wo) continue;
              const int wi = ((ci * g.cout + co) * g.k + ky) * g.k + kx;
              if (!dweight.empty()) dweight[wi] += x(ci, iy, ix) * dy(co, oy, ox);
              if (dx) (*dx)(ci, iy, ix) += weight[wi] * dy(co, oy, ox);
            }
}

template <class T>
void warp_forward(const BasicTensor<T>& src, const BasicTensor<T>& flow, BasicTensor<T>& out) {
  warp_forward_impl(src, flow, out, false);
}
template <class T>
void warp_backward(const BasicTensor<T>& src, const BasicTensor<T>& flow,
                   const BasicTensor<T>& dout, BasicTensor<T>* dsrc, BasicTensor<T>* dflow) {
  warp_backward_impl(src, flow, dout, dsrc, dflow, false);
}

template void warp_forward<float>(const Tensor&, const Tensor&, Tensor&);
template void warp_forward<double>(const TensorD&, const TensorD&, TensorD&);
template void warp_backward<float>(const Tensor&, const Tensor&, const Tensor&, Tensor*, Tensor*);
template void warp_backward<double>(const TensorD&, const TensorD&, const TensorD&, TensorD*,
                                    TensorD*);

Tensor resample_bicubic(const Tensor& src, int out_h, int out_w, double factor) {
  return resample_impl(src, out_h, out_w, factor, false);
}

}  // namespace reference
}  // namespace efenet::kernels
