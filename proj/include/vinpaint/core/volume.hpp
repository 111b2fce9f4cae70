#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vinpaint/core/tensor.hpp"

namespace vinpaint {

// F x H x W x C pixel volume with values in [0, 1].
using VideoVolume = Tensor<float>;

// F x H x W binary mask: 1 inside holes to be filled, 0 on known pixels.
class MaskVolume {
 public:
  MaskVolume() = default;
  MaskVolume(int frames, int height, int width)
      : frames_(frames), height_(height), width_(width),
        data_(static_cast<std::size_t>(frames) * height * width, 0) {}

  int frames() const { return frames_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t offset(int f, int y, int x) const {
    return (static_cast<std::size_t>(f) * height_ + y) * width_ + x;
  }
  std::uint8_t& at(int f, int y, int x) { return data_[offset(f, y, x)]; }
  std::uint8_t at(int f, int y, int x) const { return data_[offset(f, y, x)]; }
  std::uint8_t& operator[](std::size_t i) { return data_[i]; }
  std::uint8_t operator[](std::size_t i) const { return data_[i]; }
  std::uint8_t* data() { return data_.data(); }
  const std::uint8_t* data() const { return data_.data(); }

  void fill(std::uint8_t v) { std::fill(data_.begin(), data_.end(), v); }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : data_) n += v;
    return n;
  }
  std::size_t frame_count(int f) const {
    std::size_t n = 0;
    const std::size_t per = static_cast<std::size_t>(height_) * width_;
    for (std::size_t i = f * per; i < (f + 1) * per; ++i) n += data_[i];
    return n;
  }

  MaskVolume slice_frames(int first, int count) const {
    MaskVolume out(count, height_, width_);
    const std::size_t per = static_cast<std::size_t>(height_) * width_;
    std::copy(data_.begin() + static_cast<std::ptrdiff_t>(first * per),
              data_.begin() + static_cast<std::ptrdiff_t>((first + count) * per), out.data_.begin());
    return out;
  }

  friend bool operator==(const MaskVolume&, const MaskVolume&) = default;

 private:
  int frames_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

template <typename T>
void require_same_grid(const Tensor<T>& v, const MaskVolume& m, const char* where) {
  if (v.rank() != 4 || v.frames() != m.frames() || v.height() != m.height() || v.width() != m.width())
    throw ShapeMismatch(std::string(where) + ": video " + shape_str(v.shape()) + " vs mask " +
                        std::to_string(m.frames()) + "x" + std::to_string(m.height()) + "x" +
                        std::to_string(m.width()));
}

}  // namespace vinpaint
