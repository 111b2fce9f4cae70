#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <new>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "vinpaint/core/errors.hpp"

namespace vinpaint {

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream oss;
  for (std::size_t i = 0; i < shape.size(); ++i) oss << (i ? "x" : "") << shape[i];
  return oss.str();
}

// Cache-line aligned storage, so vectorized reductions see the same alignment
// (and so sum in the same order) on every run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

// Dense row-major tensor. Video-like tensors use the 4-axis layout
// (frames, height, width, channels) with channels fastest.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using Storage = std::vector<T, AlignedAllocator<T>>;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}
  Tensor(Shape shape, Storage data) : shape_(std::move(shape)), data_(std::move(data)) { check_size(); }
  Tensor(Shape shape, const std::vector<T>& data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    check_size();
  }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const { return shape_; }
  int dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  Storage& values() & { return data_; }
  const Storage& values() const& { return data_; }
  Storage values() && { return std::move(data_); }

  // Same data under a new shape with the same element count.
  Tensor reshaped(Shape shape) const& { return Tensor(std::move(shape), data_); }
  Tensor reshaped(Shape shape) && { return Tensor(std::move(shape), std::move(data_)); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // 4-axis accessors.
  int frames() const { return shape_.at(0); }
  int height() const { return shape_.at(1); }
  int width() const { return shape_.at(2); }
  int channels() const { return shape_.at(3); }
  std::size_t offset(int f, int y, int x, int c) const {
    assert(shape_.size() == 4);
    return ((static_cast<std::size_t>(f) * shape_[1] + y) * shape_[2] + x) * shape_[3] + c;
  }
  T& at(int f, int y, int x, int c) { return data_[offset(f, y, x, c)]; }
  const T& at(int f, int y, int x, int c) const { return data_[offset(f, y, x, c)]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor& operator+=(const Tensor& other) {
    require_same_shape(other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  Tensor& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  void require_same_shape(const Tensor& other, const char* where) const {
    if (shape_ != other.shape_)
      throw ShapeMismatch(std::string(where) + ": " + shape_str(shape_) + " vs " +
                          shape_str(other.shape_));
  }

  template <typename U>
  Tensor<U> cast() const {
    typename Tensor<U>::Storage out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  // Frames [first, first + count) of a 4-axis tensor.
  Tensor slice_frames(int first, int count) const {
    Shape s = shape_;
    s[0] = count;
    const std::size_t per = shape_numel(shape_) / static_cast<std::size_t>(shape_[0]);
    Storage out(data_.begin() + static_cast<std::ptrdiff_t>(first * per),
                       data_.begin() + static_cast<std::ptrdiff_t>((first + count) * per));
    return Tensor(std::move(s), std::move(out));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void check_size() const {
    if (data_.size() != shape_numel(shape_))
      throw ShapeMismatch("data size " + std::to_string(data_.size()) + " does not match shape " +
                          shape_str(shape_));
  }

  Shape shape_;
  Storage data_;
};

// Elementwise sum of two same-shaped tensors.
template <typename T>
Tensor<T> operator+(Tensor<T> a, const Tensor<T>& b) {
  a += b;
  return a;
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  a.require_same_shape(b, "max_abs_diff");
  T m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, a[i] > b[i] ? a[i] - b[i] : b[i] - a[i]);
  return m;
}

template <typename T>
double mean_value(const Tensor<T>& t) {
  if (t.empty()) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) s += static_cast<double>(t[i]);
  return s / static_cast<double>(t.size());
}

}  // namespace vinpaint
