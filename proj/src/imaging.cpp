#include "efenet/imaging.hpp"

#include <stdexcept>

#include "efenet/kernels.hpp"

namespace efenet {
namespace {

void require_finite_flow(const FlowField& flow) {
  if (!all_finite(flow.tensor())) throw std::invalid_argument("flow contains non-finite values");
}

int scaled_extent(int dim, double factor) {
  const long v = std::lround(dim * factor);
  if (v < 1) throw std::invalid_argument("bicubic_resample: output dimension < 1");
  return static_cast<int>(v);
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

Tensor bicubic_resample(const Tensor& t, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("bicubic_resample: factor must be positive");
  if (factor == 1.0) return t;
  return kernels::resample_bicubic(t, scaled_extent(t.height(), factor),
                                   scaled_extent(t.width(), factor), factor);
}

Frame bicubic_resample(const Frame& frame, double factor) {
  return Frame(bicubic_resample(frame.tensor(), factor));
}

Tensor backward_warp(const Tensor& source, const FlowField& flow) {
  require_finite_flow(flow);
  Tensor out;
  kernels::warp_forward(source, flow.tensor(), out);
  return out;
}

Frame backward_warp(const Frame& source, const FlowField& flow) {
  return Frame(backward_warp(source.tensor(), flow));
}

FlowField compose_flows(const FlowField& near, const FlowField& far) {
  if (near.height() != far.height() || near.width() != far.width())
    throw std::invalid_argument("compose_flows: dimension mismatch");
  Tensor composed = backward_warp(near.tensor(), far);
  const Tensor& f = far.tensor();
  for (std::size_t i = 0; i < composed.size(); ++i) composed[i] = f[i] + composed[i];
  return FlowField(std::move(composed));
}

FlowField resize_flow(const FlowField& flow, int h, int w) {
  if (h < 1 || w < 1) throw std::invalid_argument("resize_flow: dimension < 1");
  if (h == flow.height() && w == flow.width()) return flow;
  const double sx = static_cast<double>(flow.width()) / w;
  const double sy = static_cast<double>(flow.height()) / h;
  // Sampling positions expressed as a displacement from the output grid.
  Tensor sampler(2, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      sampler(0, y, x) = static_cast<float>((x + 0.5) * sx - 0.5 - x);
      sampler(1, y, x) = static_cast<float>((y + 0.5) * sy - 0.5 - y);
    }
  Tensor out;
  kernels::warp_forward(flow.tensor(), sampler, out);
  const float gx = static_cast<float>(1.0 / sx), gy = static_cast<float>(1.0 / sy);
  for (float& v : out.channel(0)) v *= gx;
  for (float& v : out.channel(1)) v *= gy;
  return FlowField(std::move(out));
}

Tensor pad_reflect(const Tensor& t, int multiple) {
  if (multiple < 1) throw std::invalid_argument("pad_reflect: multiple must be >= 1");
  const int h = (t.height() + multiple - 1) / multiple * multiple;
  const int w = (t.width() + multiple - 1) / multiple * multiple;
  if (h == t.height() && w == t.width()) return t;
  Tensor out(t.channels(), h, w);
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < h; ++y) {
      const int sy = reflect_index(y, t.height());
      for (int x = 0; x < w; ++x) out(c, y, x) = t(c, sy, reflect_index(x, t.width()));
    }
  return out;
}

Tensor crop(const Tensor& t, int h, int w) {
  if (h > t.height() || w > t.width()) throw std::invalid_argument("crop: target larger than source");
  if (h == t.height() && w == t.width()) return t;
  Tensor out(t.channels(), h, w);
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out(c, y, x) = t(c, y, x);
  return out;
}

}  // namespace efenet
