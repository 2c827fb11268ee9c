#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace propnet {

// Read-only view of one H x W plane, row-major.
struct PlaneView {
  std::span<const double> values;
  int height = 0;
  int width = 0;

  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
};

// Dense channels x H x W array of doubles, row-major, channel-major.
// Used for heatmap stacks (one channel per landmark or boundary) and for
// feature maps alike.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int channels, int height, int width, double fill = 0.0);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int c, int row, int col) { return data_[index(c, row, col)]; }
  double operator()(int c, int row, int col) const { return data_[index(c, row, col)]; }

  std::span<double> channel(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const double> channel(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  PlaneView view(int c) const { return {channel(c), height_, width_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor3& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t index(int c, int row, int col) const {
    return (static_cast<std::size_t>(c) * height_ + row) * width_ + col;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

using HeatmapStack = Tensor3;
using FeatureMap = Tensor3;

// Channel-wise concatenation; spatial sizes must agree.
Tensor3 concat_channels(const Tensor3& a, const Tensor3& b);

// Copy of channels [first, first + count).
Tensor3 slice_channels(const Tensor3& t, int first, int count);

}  // namespace propnet
