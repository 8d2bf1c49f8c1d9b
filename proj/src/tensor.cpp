#include <cmath>
#include <stdexcept>

#include "efenet/frame.hpp"
#include "efenet/tensor.hpp"

namespace efenet {

std::string to_string(const Shape& s) {
  return std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

template <class T>
bool all_finite(const BasicTensor<T>& t) {
  for (T v : t.span())
    if (!std::isfinite(v)) return false;
  return true;
}

template <class T>
BasicTensor<T> concat_channels(std::span<const BasicTensor<T>* const> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
  const Shape first = parts.front()->shape();
  int c = 0;
  for (const auto* p : parts) {
    if (!p->shape().same_spatial(first))
      throw std::invalid_argument("concat_channels: spatial mismatch " + to_string(p->shape()) +
                                  " vs " + to_string(first));
    c += p->channels();
  }
  BasicTensor<T> out(c, first.h, first.w);
  T* dst = out.data();
  for (const auto* p : parts) dst = std::copy(p->data(), p->data() + p->size(), dst);
  return out;
}

template <class T>
BasicTensor<T> slice_channels(const BasicTensor<T>& t, int first, int count) {
  if (first < 0 || count < 0 || first + count > t.channels())
    throw std::invalid_argument("slice_channels: range out of bounds");
  BasicTensor<T> out(count, t.height(), t.width());
  const auto* begin = t.data() + t.shape().plane() * first;
  std::copy(begin, begin + out.size(), out.data());
  return out;
}

template bool all_finite(const Tensor&);
template bool all_finite(const TensorD&);
template Tensor concat_channels(std::span<const Tensor* const>);
template TensorD concat_channels(std::span<const TensorD* const>);
template Tensor slice_channels(const Tensor&, int, int);
template TensorD slice_channels(const TensorD&, int, int);

// ---------------------------------------------------------------------------

Frame::Frame(int height, int width, int channels, float fill) : Frame(Tensor(channels, height, width, fill)) {}

Frame::Frame(Tensor pixels) : pixels_(std::move(pixels)) {
  if (pixels_.height() < 1 || pixels_.width() < 1)
    throw std::invalid_argument("Frame: dimensions must be positive");
  if (pixels_.channels() != 1 && pixels_.channels() != 3)
    throw std::invalid_argument("Frame: channel count must be 1 or 3");
}

FlowField::FlowField(int height, int width, float dx, float dy) : flow_(2, height, width) {
  if (height < 1 || width < 1) throw std::invalid_argument("FlowField: dimensions must be positive");
  std::fill(flow_.channel(0).begin(), flow_.channel(0).end(), dx);
  std::fill(flow_.channel(1).begin(), flow_.channel(1).end(), dy);
}

FlowField::FlowField(Tensor displacement) : flow_(std::move(displacement)) {
  if (flow_.channels() != 2) throw std::invalid_argument("FlowField: expected 2 channels");
  if (flow_.height() < 1 || flow_.width() < 1)
    throw std::invalid_argument("FlowField: dimensions must be positive");
}

}  // namespace efenet
