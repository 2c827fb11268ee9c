#include "propnet/shift_ops.hpp"

#include <algorithm>
#include <cmath>

#include "propnet/error.hpp"

namespace propnet {

namespace {

// Circular shift by a real amount, separable linear interpolation.
FeatureMap fractional_shift(const FeatureMap& f, double dy, double dx) {
  const int h = f.height(), w = f.width();
  const int fy = static_cast<int>(std::floor(dy));
  const int fx = static_cast<int>(std::floor(dx));
  const double ty = dy - fy, tx = dx - fx;
  FeatureMap out(f.channels(), h, w);
  for (int ch = 0; ch < f.channels(); ++ch) {
    for (int r = 0; r < h; ++r) {
      const int r0 = kernels::pad_index(r - fy, h, Padding::circular);
      const int r1 = kernels::pad_index(r - fy - 1, h, Padding::circular);
      for (int c = 0; c < w; ++c) {
        const int c0 = kernels::pad_index(c - fx, w, Padding::circular);
        const int c1 = kernels::pad_index(c - fx - 1, w, Padding::circular);
        const double top = (1.0 - tx) * f(ch, r0, c0) + tx * f(ch, r0, c1);
        const double bottom = (1.0 - tx) * f(ch, r1, c0) + tx * f(ch, r1, c1);
        out(ch, r, c) = (1.0 - ty) * top + ty * bottom;
      }
    }
  }
  return out;
}

}  // namespace

BlurKernel::BlurKernel(int size) {
  switch (size) {
    case 2: taps_ = {0.5, 0.5}; break;
    case 3: taps_ = {0.25, 0.5, 0.25}; break;
    case 5: taps_ = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16}; break;
    default: throw InvalidInput("BlurKernel: size must be 2, 3 or 5");
  }
}

std::vector<double> BlurKernel::weights_2d() const {
  std::vector<double> out;
  out.reserve(taps_.size() * taps_.size());
  for (double a : taps_) {
    for (double b : taps_) out.push_back(a * b);
  }
  return out;
}

FeatureMap blur_downsample(const FeatureMap& f, const BlurKernel& k, Padding padding) {
  return kernels::blur_downsample(f, k.taps(), padding);
}

FeatureMap subsample(const FeatureMap& f) {
  const int oh = (f.height() + 1) / 2, ow = (f.width() + 1) / 2;
  FeatureMap out(f.channels(), oh, ow);
  for (int ch = 0; ch < f.channels(); ++ch) {
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) out(ch, i, j) = f(ch, 2 * i, 2 * j);
    }
  }
  return out;
}

FeatureMap max_blur_pool(const FeatureMap& f, const BlurKernel& k, Padding padding) {
  const int h = f.height(), w = f.width();
  if (h < 2 || w < 2) throw InvalidInput("max_blur_pool: input smaller than 2x2");
  FeatureMap dense(f.channels(), h, w);
  auto wrap = [&](int i, int n) {
    if (padding == Padding::circular) return kernels::pad_index(i, n, Padding::circular);
    return std::min(i, n - 1);
  };
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < f.channels(); ++ch) {
    for (int r = 0; r < h; ++r) {
      const int r1 = wrap(r + 1, h);
      for (int c = 0; c < w; ++c) {
        const int c1 = wrap(c + 1, w);
        dense(ch, r, c) = std::max({f(ch, r, c), f(ch, r, c1), f(ch, r1, c), f(ch, r1, c1)});
      }
    }
  }
  return blur_downsample(dense, k, padding);
}

FeatureMap add_coord_channels(const FeatureMap& f) {
  const int h = f.height(), w = f.width();
  FeatureMap out(f.channels() + 2, h, w);
  std::copy(f.data().begin(), f.data().end(), out.data().begin());
  auto coord = [](int i, int n) { return n == 1 ? 0.0 : -1.0 + 2.0 * i / (n - 1); };
  const int cx = f.channels(), cy = f.channels() + 1;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      out(cx, r, c) = coord(c, w);
      out(cy, r, c) = coord(r, h);
    }
  }
  return out;
}

FeatureMap circular_shift(const FeatureMap& f, int dy, int dx) {
  const int h = f.height(), w = f.width();
  FeatureMap out(f.channels(), h, w);
  for (int ch = 0; ch < f.channels(); ++ch) {
    for (int r = 0; r < h; ++r) {
      const int sr = kernels::pad_index(r - dy, h, Padding::circular);
      for (int c = 0; c < w; ++c) {
        out(ch, r, c) = f(ch, sr, kernels::pad_index(c - dx, w, Padding::circular));
      }
    }
  }
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("cosine_similarity: length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 && bb == 0.0) return 1.0;
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

double shift_similarity(const Pipeline& pipeline, const FeatureMap& f, int dy, int dx) {
  const FeatureMap base = pipeline(f);
  if (base.channels() == 0 || base.height() == 0 || base.width() == 0) {
    throw InvalidInput("shift_consistency: pipeline produced an empty map");
  }
  const double scale_y = static_cast<double>(base.height()) / f.height();
  const double scale_x = static_cast<double>(base.width()) / f.width();
  const FeatureMap shifted = pipeline(circular_shift(f, dy, dx));
  if (!shifted.same_shape(base)) throw InvalidInput("shift_consistency: output shape changed");
  const FeatureMap reference = fractional_shift(base, dy * scale_y, dx * scale_x);
  return std::max(0.0, cosine_similarity(shifted.data(), reference.data()));
}

double shift_consistency(const Pipeline& pipeline, const FeatureMap& f, int max_shift) {
  if (max_shift < 0) throw InvalidInput("shift_consistency: max_shift must be >= 0");
  double total = 0.0;
  int count = 0;
  for (int dy = -max_shift; dy <= max_shift; ++dy) {
    for (int dx = -max_shift; dx <= max_shift; ++dx) {
      total += shift_similarity(pipeline, f, dy, dx);
      ++count;
    }
  }
  return total / count;
}

}  // namespace propnet
