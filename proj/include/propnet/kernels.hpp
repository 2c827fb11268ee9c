#pragma once

#include <span>
#include <vector>

#include "propnet/tensor.hpp"

namespace propnet {

// Square convolution, stride 1, zero "same" padding.
// weight layout: [out][in][ky][kx].
struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  std::vector<double> weight;
  std::vector<double> bias;

  ConvSpec() = default;
  ConvSpec(int in, int out, int k);

  double& w(int o, int i, int ky, int kx) {
    return weight[((static_cast<std::size_t>(o) * in_channels + i) * kernel + ky) * kernel + kx];
  }
  double w(int o, int i, int ky, int kx) const {
    return weight[((static_cast<std::size_t>(o) * in_channels + i) * kernel + ky) * kernel + kx];
  }
  // Shapes consistent, odd kernel, finite values.
  void validate() const;
};

enum class Padding { reflect, circular };

namespace kernels {

// Straightforward per-pixel loops; the reference the parallel kernels are
// tested against.
Tensor3 conv2d_reference(const Tensor3& input, const ConvSpec& conv);

// Output-channel parallel. Per output pixel the accumulation order (bias,
// then input channel, ky, kx) matches conv2d_reference, so results are
// bit-identical to it for any thread count.
Tensor3 conv2d(const Tensor3& input, const ConvSpec& conv);

// Direct 2-D stride-2 filtering with the outer product of `taps`.
Tensor3 blur_downsample_reference(const Tensor3& input, std::span<const double> taps,
                                  Padding padding);

// Separable (row pass, then column pass) and channel parallel.
Tensor3 blur_downsample(const Tensor3& input, std::span<const double> taps, Padding padding);

// Maps an out-of-range index back into [0, n).
int pad_index(int i, int n, Padding padding);

}  // namespace kernels
}  // namespace propnet
