#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace efenet {

/// Channel-major (CHW) extent of a single-sample tensor.
struct Shape {
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t size() const { return plane() * c; }
  bool same_spatial(const Shape& o) const { return h == o.h && w == o.w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense CHW tensor. Owns its storage; copies are deep.
template <class T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  BasicTensor(int c, int h, int w, T fill = T(0)) : BasicTensor(Shape{c, h, w}, fill) {}
  explicit BasicTensor(Shape s, T fill = T(0)) : shape_(s) {
    if (s.c < 0 || s.h < 0 || s.w < 0) throw std::invalid_argument("negative tensor extent");
    data_.assign(s.size(), fill);
  }

  const Shape& shape() const { return shape_; }
  int channels() const { return shape_.c; }
  int height() const { return shape_.h; }
  int width() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }

  std::span<T> channel(int c) { return {data_.data() + shape_.plane() * c, shape_.plane()}; }
  std::span<const T> channel(int c) const {
    return {data_.data() + shape_.plane() * c, shape_.plane()};
  }

  T& operator()(int c, int y, int x) {
    assert(c >= 0 && c < shape_.c && y >= 0 && y < shape_.h && x >= 0 && x < shape_.w);
    return data_[(static_cast<std::size_t>(c) * shape_.h + y) * shape_.w + x];
  }
  const T& operator()(int c, int y, int x) const {
    assert(c >= 0 && c < shape_.c && y >= 0 && y < shape_.h && x >= 0 && x < shape_.w);
    return data_[(static_cast<std::size_t>(c) * shape_.h + y) * shape_.w + x];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <class U>
  BasicTensor<U> cast() const {
    BasicTensor<U> out(shape_);
    std::transform(data_.begin(), data_.end(), out.data(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_{};
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

template <class T>
bool all_finite(const BasicTensor<T>& t);

/// Channel-wise concatenation of same-spatial tensors.
template <class T>
BasicTensor<T> concat_channels(std::span<const BasicTensor<T>* const> parts);

/// Copies channels [first, first + count).
template <class T>
BasicTensor<T> slice_channels(const BasicTensor<T>& t, int first, int count);

}  // namespace efenet
