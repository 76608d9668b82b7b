#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace aiparse {

/// Dense row-major 2-D grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width), data_(checked_size(height, width), fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int row, int col) { return data_[index(row, col)]; }
  const T& operator()(int row, int col) const { return data_[index(row, col)]; }

  bool in_bounds(int row, int col) const {
    return row >= 0 && row < height_ && col >= 0 && col < width_;
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  static std::size_t checked_size(int height, int width) {
    if (height < 0 || width < 0) throw std::invalid_argument("Grid: negative dimension");
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

/// Part-category index per pixel, 0 = background.
using LabelRaster = Grid<std::uint8_t>;
/// Binary boundary mask, 1 = edge pixel.
using EdgeRaster = Grid<std::uint8_t>;

/// 8-bit RGB image, interleaved. Channel values map to [0,1] by /255.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int height, int width) : height_(height), width_(width), data_(3u * height * width, 0) {}

  int height() const { return height_; }
  int width() const { return width_; }

  std::uint8_t& at(int row, int col, int channel) {
    return data_[3u * (static_cast<std::size_t>(row) * width_ + col) + channel];
  }
  std::uint8_t at(int row, int col, int channel) const {
    return data_[3u * (static_cast<std::size_t>(row) * width_ + col) + channel];
  }
  float value(int row, int col, int channel) const { return at(row, col, channel) / 255.0f; }

  std::vector<std::uint8_t>& data() { return data_; }
  const std::vector<std::uint8_t>& data() const { return data_; }

  bool operator==(const RgbImage&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

}  // namespace aiparse
