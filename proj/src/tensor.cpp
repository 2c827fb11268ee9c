#include "propnet/tensor.hpp"

#include <algorithm>

#include "propnet/error.hpp"

namespace propnet {

Tensor3::Tensor3(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 0 || height < 0 || width < 0) {
    throw InvalidInput("Tensor3: negative dimension");
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

Tensor3 concat_channels(const Tensor3& a, const Tensor3& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw InvalidInput("concat_channels: spatial size mismatch");
  }
  Tensor3 out(a.channels() + b.channels(), a.height(), a.width());
  auto it = std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), it);
  return out;
}

Tensor3 slice_channels(const Tensor3& t, int first, int count) {
  if (first < 0 || count < 0 || first + count > t.channels()) {
    throw InvalidInput("slice_channels: range out of bounds");
  }
  Tensor3 out(count, t.height(), t.width());
  const auto begin = t.data().begin() + static_cast<std::ptrdiff_t>(first * t.plane_size());
  std::copy(begin, begin + static_cast<std::ptrdiff_t>(count * t.plane_size()),
            out.data().begin());
  return out;
}

}  // namespace propnet
