#include "propnet/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "propnet/error.hpp"

namespace propnet {

ConvSpec::ConvSpec(int in, int out, int k)
    : in_channels(in),
      out_channels(out),
      kernel(k),
      weight(static_cast<std::size_t>(out) * in * k * k, 0.0),
      bias(static_cast<std::size_t>(out), 0.0) {}

void ConvSpec::validate() const {
  if (in_channels <= 0 || out_channels <= 0) throw ConfigError("conv: channel counts must be positive");
  if (kernel <= 0 || kernel % 2 == 0) throw ConfigError("conv: kernel size must be odd");
  const auto expected = static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
  if (weight.size() != expected) {
    throw ConfigError("conv: weight array has " + std::to_string(weight.size()) +
                      " entries, expected " + std::to_string(expected));
  }
  if (bias.size() != static_cast<std::size_t>(out_channels)) {
    throw ConfigError("conv: bias length does not match out_channels");
  }
  for (double v : weight) {
    if (!std::isfinite(v)) throw ConfigError("conv: non-finite weight");
  }
  for (double v : bias) {
    if (!std::isfinite(v)) throw ConfigError("conv: non-finite bias");
  }
}

namespace kernels {

namespace {

void check_conv_input(const Tensor3& input, const ConvSpec& conv) {
  conv.validate();
  if (input.channels() != conv.in_channels) {
    throw ConfigError("conv: input has " + std::to_string(input.channels()) +
                      " channels, weights expect " + std::to_string(conv.in_channels));
  }
}

void check_blur_input(const Tensor3& input, std::span<const double> taps) {
  const int n = static_cast<int>(taps.size());
  if (n == 0) throw InvalidInput("blur: empty kernel");
  if (input.height() < std::max(n, 2) || input.width() < std::max(n, 2)) {
    throw InvalidInput("blur: input smaller than kernel");
  }
}

int tap_origin(int n) { return -((n - 1) / 2); }

}  // namespace

int pad_index(int i, int n, Padding padding) {
  if (padding == Padding::circular) {
    const int m = i % n;
    return m < 0 ? m + n : m;
  }
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

Tensor3 conv2d_reference(const Tensor3& input, const ConvSpec& conv) {
  check_conv_input(input, conv);
  const int h = input.height(), w = input.width(), k = conv.kernel, pad = k / 2;
  Tensor3 out(conv.out_channels, h, w);
  for (int o = 0; o < conv.out_channels; ++o) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double acc = conv.bias[o];
        for (int i = 0; i < conv.in_channels; ++i) {
          for (int ky = 0; ky < k; ++ky) {
            const int sr = r + ky - pad;
            if (sr < 0 || sr >= h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int sc = c + kx - pad;
              if (sc < 0 || sc >= w) continue;
              acc += conv.w(o, i, ky, kx) * input(i, sr, sc);
            }
          }
        }
        out(o, r, c) = acc;
      }
    }
  }
  return out;
}

Tensor3 conv2d(const Tensor3& input, const ConvSpec& conv) {
  check_conv_input(input, conv);
  const int h = input.height(), w = input.width(), k = conv.kernel, pad = k / 2;
  Tensor3 out(conv.out_channels, h, w);

#pragma omp parallel for schedule(dynamic)
  for (int o = 0; o < conv.out_channels; ++o) {
    auto dst = out.channel(o);
    std::fill(dst.begin(), dst.end(), conv.bias[o]);
    for (int i = 0; i < conv.in_channels; ++i) {
      const auto src = input.channel(i);
      for (int ky = 0; ky < k; ++ky) {
        const int dy = ky - pad;
        const int r0 = std::max(0, -dy);
        const int r1 = std::min(h, h - dy);
        for (int kx = 0; kx < k; ++kx) {
          const double wt = conv.w(o, i, ky, kx);
          const int dx = kx - pad;
          const int c0 = std::max(0, -dx);
          const int c1 = std::min(w, w - dx);
          for (int r = r0; r < r1; ++r) {
            double* drow = dst.data() + static_cast<std::size_t>(r) * w;
            const double* srow = src.data() + static_cast<std::size_t>(r + dy) * w + dx;
#pragma omp simd
            for (int c = c0; c < c1; ++c) drow[c] += wt * srow[c];
          }
        }
      }
    }
  }
  return out;
}

Tensor3 blur_downsample_reference(const Tensor3& input, std::span<const double> taps,
                                  Padding padding) {
  check_blur_input(input, taps);
  const int n = static_cast<int>(taps.size()), origin = tap_origin(n);
  const int h = input.height(), w = input.width();
  const int oh = (h + 1) / 2, ow = (w + 1) / 2;
  Tensor3 out(input.channels(), oh, ow);
  for (int ch = 0; ch < input.channels(); ++ch) {
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (int a = 0; a < n; ++a) {
          const int r = pad_index(2 * i + origin + a, h, padding);
          for (int b = 0; b < n; ++b) {
            const int c = pad_index(2 * j + origin + b, w, padding);
            acc += taps[a] * taps[b] * input(ch, r, c);
          }
        }
        out(ch, i, j) = acc;
      }
    }
  }
  return out;
}

Tensor3 blur_downsample(const Tensor3& input, std::span<const double> taps, Padding padding) {
  check_blur_input(input, taps);
  const int n = static_cast<int>(taps.size()), origin = tap_origin(n);
  const int h = input.height(), w = input.width();
  const int oh = (h + 1) / 2, ow = (w + 1) / 2;
  Tensor3 out(input.channels(), oh, ow);

  std::vector<int> col_idx(static_cast<std::size_t>(ow) * n), row_idx(static_cast<std::size_t>(oh) * n);
  for (int j = 0; j < ow; ++j) {
    for (int b = 0; b < n; ++b) col_idx[j * n + b] = pad_index(2 * j + origin + b, w, padding);
  }
  for (int i = 0; i < oh; ++i) {
    for (int a = 0; a < n; ++a) row_idx[i * n + a] = pad_index(2 * i + origin + a, h, padding);
  }

#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < input.channels(); ++ch) {
    // Horizontal pass over every input row, stride 2 in columns.
    std::vector<double> rows(static_cast<std::size_t>(h) * ow, 0.0);
    const auto src = input.channel(ch);
    for (int r = 0; r < h; ++r) {
      const double* srow = src.data() + static_cast<std::size_t>(r) * w;
      double* trow = rows.data() + static_cast<std::size_t>(r) * ow;
      for (int j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b) acc += taps[b] * srow[col_idx[j * n + b]];
        trow[j] = acc;
      }
    }
    // Vertical pass, stride 2 in rows.
    auto dst = out.channel(ch);
    for (int i = 0; i < oh; ++i) {
      double* drow = dst.data() + static_cast<std::size_t>(i) * ow;
      for (int a = 0; a < n; ++a) {
        const double t = taps[a];
        const double* trow = rows.data() + static_cast<std::size_t>(row_idx[i * n + a]) * ow;
        for (int j = 0; j < ow; ++j) drow[j] += t * trow[j];
      }
    }
  }
  return out;
}

}  // namespace kernels
}  // namespace propnet
