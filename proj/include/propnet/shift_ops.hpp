#pragma once

#include <array>
#include <functional>
#include <vector>

#include "propnet/kernels.hpp"
#include "propnet/tensor.hpp"

namespace propnet {

// Binomial low-pass filter: (1,1)/2, (1,2,1)/4 or (1,4,6,4,1)/16.
class BlurKernel {
 public:
  explicit BlurKernel(int size);

  int size() const { return static_cast<int>(taps_.size()); }
  const std::vector<double>& taps() const { return taps_; }
  // Outer product of the taps, row-major size x size.
  std::vector<double> weights_2d() const;

 private:
  std::vector<double> taps_;
};

// Low-pass then subsample at stride 2. Output is ceil(H/2) x ceil(W/2).
FeatureMap blur_downsample(const FeatureMap& f, const BlurKernel& k,
                           Padding padding = Padding::reflect);

// Plain stride-2 subsampling, no filtering (the aliasing baseline).
FeatureMap subsample(const FeatureMap& f);

// Dense 2x2 max (stride 1, edge replicated) followed by blur_downsample.
FeatureMap max_blur_pool(const FeatureMap& f, const BlurKernel& k,
                         Padding padding = Padding::reflect);

// Appends x and y coordinate channels normalized to [-1, 1]; a length-1
// axis gets 0.
FeatureMap add_coord_channels(const FeatureMap& f);

// Circular shift: out(r, c) = f(r - dy, c - dx).
FeatureMap circular_shift(const FeatureMap& f, int dy, int dx);

using Pipeline = std::function<FeatureMap(const FeatureMap&)>;

// Mean over all shifts (dy, dx) in [-max_shift, max_shift]^2 of the cosine
// similarity between pipeline(shift(f)) and pipeline(f) shifted by the same
// amount divided by the pipeline's stride (bilinear, circular, when that is
// fractional). Negative similarities count as 0; two all-zero outputs
// count as 1. 1 means perfectly shift-equivariant.
double shift_consistency(const Pipeline& pipeline, const FeatureMap& f, int max_shift);

// The term of shift_consistency for the single shift (dy, dx).
double shift_similarity(const Pipeline& pipeline, const FeatureMap& f, int dy, int dx);

// Cosine similarity with the zero-vector conventions of shift_consistency.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace propnet
