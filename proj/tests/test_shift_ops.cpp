#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "propnet/error.hpp"
#include "propnet/random.hpp"
#include "propnet/shift_ops.hpp"
#include "propnet/synthetic.hpp"

using namespace propnet;

namespace {

double mass(const FeatureMap& f) { return std::accumulate(f.data().begin(), f.data().end(), 0.0); }

FeatureMap checkerboard(int size) {
  FeatureMap f(1, size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) f(0, y, x) = (x + y) % 2 == 0 ? 1.0 : -1.0;
  }
  return f;
}

}  // namespace

TEST(BlurKernel, BinomialTaps) {
  for (int n : {2, 3, 5}) {
    const BlurKernel k(n);
    const auto& t = k.taps();
    EXPECT_EQ(std::accumulate(t.begin(), t.end(), 0.0), 1.0);
    for (int i = 0; i < n; ++i) EXPECT_EQ(t[i], t[n - 1 - i]);
    const auto w = k.weights_2d();
    ASSERT_EQ(w.size(), static_cast<std::size_t>(n * n));
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) EXPECT_EQ(w[a * n + b], t[a] * t[b]);
    }
  }
  EXPECT_EQ(BlurKernel(3).taps(), (std::vector<double>{0.25, 0.5, 0.25}));
  EXPECT_THROW(BlurKernel(4), InvalidInput);
  EXPECT_THROW(BlurKernel(1), InvalidInput);
}

TEST(BlurDownsample, ConstantPassesThrough) {
  const FeatureMap f(2, 9, 10, 3.5);
  for (int n : {2, 3, 5}) {
    for (Padding p : {Padding::reflect, Padding::circular}) {
      const FeatureMap out = blur_downsample(f, BlurKernel(n), p);
      EXPECT_EQ(out.height(), 5);
      EXPECT_EQ(out.width(), 5);
      for (double v : out.data()) EXPECT_NEAR(v, 3.5, 1e-15);
    }
  }
}

TEST(BlurDownsample, TwoTapKernelAveragesBlocks) {
  FeatureMap f(1, 2, 2);
  f(0, 0, 0) = 1;
  f(0, 0, 1) = 2;
  f(0, 1, 0) = 3;
  f(0, 1, 1) = 6;
  const FeatureMap out = blur_downsample(f, BlurKernel(2));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out(0, 0, 0), 3.0);
}

TEST(BlurDownsample, ImpulseResponseIsBinomialOuterProduct) {
  // (1,2,1)^T (1,2,1) / 16 sampled at even anchors.
  FeatureMap centre(1, 16, 16);
  centre(0, 8, 8) = 1.0;
  FeatureMap out = blur_downsample(centre, BlurKernel(3));
  EXPECT_EQ(out(0, 4, 4), 4.0 / 16);
  EXPECT_EQ(mass(out), 4.0 / 16);

  FeatureMap odd(1, 16, 16);
  odd(0, 9, 9) = 1.0;
  out = blur_downsample(odd, BlurKernel(3));
  for (auto [r, c] : {std::pair{4, 4}, std::pair{4, 5}, std::pair{5, 4}, std::pair{5, 5}}) {
    EXPECT_EQ(out(0, r, c), 1.0 / 16);
  }
  EXPECT_EQ(mass(out), 4.0 / 16);

  FeatureMap mixed(1, 16, 16);
  mixed(0, 9, 8) = 1.0;
  out = blur_downsample(mixed, BlurKernel(3));
  EXPECT_EQ(out(0, 4, 4), 2.0 / 16);
  EXPECT_EQ(out(0, 5, 4), 2.0 / 16);
  EXPECT_EQ(mass(out), 4.0 / 16);
}

TEST(BlurDownsample, CircularPaddingKeepsQuarterOfMass) {
  Rng rng(13);
  FeatureMap f(2, 12, 16);
  for (double& v : f.data()) v = rng.uniform(0.0, 1.0);
  for (int n : {2, 3, 5}) {
    const FeatureMap out = blur_downsample(f, BlurKernel(n), Padding::circular);
    EXPECT_NEAR(4.0 * mass(out), mass(f), 1e-11);
  }
}

TEST(BlurDownsample, InputSmallerThanKernelThrows) {
  EXPECT_THROW(blur_downsample(FeatureMap(1, 3, 8), BlurKernel(5)), InvalidInput);
  EXPECT_THROW(blur_downsample(FeatureMap(1, 1, 1), BlurKernel(2)), InvalidInput);
}

TEST(MaxBlurPool, ConstantPassesThrough) {
  const FeatureMap out = max_blur_pool(FeatureMap(1, 8, 8, -2.0), BlurKernel(3));
  for (double v : out.data()) EXPECT_NEAR(v, -2.0, 1e-15);
}

TEST(MaxBlurPool, ImpulsePeakAndMassBounded) {
  FeatureMap f(1, 16, 16);
  f(0, 7, 7) = 1.0;
  for (int n : {2, 3, 5}) {
    const FeatureMap out = max_blur_pool(f, BlurKernel(n), Padding::circular);
    double peak = 0.0;
    for (double v : out.data()) {
      EXPECT_GE(v, 0.0);
      peak = std::max(peak, v);
    }
    EXPECT_LE(peak, 1.0);
    EXPECT_GT(peak, 0.0);
    // The dense max spreads the impulse over 4 pixels; downsampling keeps 1/4.
    EXPECT_NEAR(mass(out), 1.0, 1e-12);
  }
}

TEST(MaxBlurPool, RampStaysMonotone) {
  FeatureMap f(1, 12, 12);
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 12; ++c) f(0, r, c) = c;
  }
  for (int n : {2, 3, 5}) {
    const FeatureMap out = max_blur_pool(f, BlurKernel(n));
    for (int r = 0; r < out.height(); ++r) {
      for (int c = 1; c < out.width(); ++c) EXPECT_GE(out(0, r, c), out(0, r, c - 1));
    }
  }
}

TEST(CoordChannels, NormalizedGrid) {
  FeatureMap f(2, 3, 3, 7.0);
  const FeatureMap out = add_coord_channels(f);
  ASSERT_EQ(out.channels(), 4);
  for (int r = 0; r < 3; ++r) {
    EXPECT_EQ(out(2, r, 0), -1.0);
    EXPECT_EQ(out(2, r, 1), 0.0);
    EXPECT_EQ(out(2, r, 2), 1.0);
    EXPECT_EQ(out(3, 0, r), -1.0);
    EXPECT_EQ(out(3, 2, r), 1.0);
  }
  EXPECT_EQ(slice_channels(out, 0, 2), f);

  const FeatureMap one = add_coord_channels(FeatureMap(1, 1, 1, 5.0));
  EXPECT_EQ(one(1, 0, 0), 0.0);
  EXPECT_EQ(one(2, 0, 0), 0.0);

  const FeatureMap wide = add_coord_channels(FeatureMap(1, 2, 64));
  for (int j = 0; j < 64; ++j) EXPECT_NEAR(wide(1, 1, j), -1.0 + 2.0 * j / 63.0, 1e-15);
  EXPECT_EQ(wide(1, 0, 63), 1.0);
}

TEST(CircularShift, InverseRestoresInput) {
  Rng rng(17);
  FeatureMap f(2, 5, 7);
  for (double& v : f.data()) v = rng.uniform();
  EXPECT_EQ(circular_shift(circular_shift(f, 3, -2), -3, 2), f);
  EXPECT_EQ(circular_shift(f, 5, 7), f);
  const FeatureMap s = circular_shift(f, 1, 2);
  EXPECT_EQ(s(1, 1, 2), f(1, 0, 0));
  EXPECT_EQ(s(0, 0, 0), f(0, 4, 5));
}

TEST(CosineSimilarity, Conventions) {
  const std::vector<double> a{1, 2, 3}, z{0, 0, 0}, neg{-1, -2, -3};
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-15);
  EXPECT_NEAR(cosine_similarity(a, neg), -1.0, 1e-15);
  EXPECT_EQ(cosine_similarity(z, z), 1.0);
  EXPECT_EQ(cosine_similarity(a, z), 0.0);
  EXPECT_THROW(cosine_similarity(a, std::vector<double>{1.0}), InvalidInput);
}

TEST(ShiftConsistency, IdentityPipelineScoresOne) {
  Rng rng(19);
  const FeatureMap f = lowpass_noise(rng, 1, 16, 16, 2.0);
  EXPECT_NEAR(shift_consistency([](const FeatureMap& x) { return x; }, f, 2), 1.0, 1e-12);
}

TEST(ShiftConsistency, ScoreInUnitInterval) {
  Rng rng(23);
  const FeatureMap f = lowpass_noise(rng, 2, 16, 16, 1.0);
  const double s = shift_consistency(subsample, f, 2);
  EXPECT_GE(s, 0.0);
  EXPECT_LE(s, 1.0);
}

TEST(ShiftConsistency, CheckerboardAliasesWithoutBlur) {
  const FeatureMap f = checkerboard(16);
  const Pipeline blurred = [](const FeatureMap& x) {
    return blur_downsample(x, BlurKernel(3), Padding::circular);
  };
  const double plain = shift_similarity(subsample, f, 0, 1);
  EXPECT_LT(plain, 0.5);
  EXPECT_GT(shift_similarity(blurred, f, 0, 1), plain);
  // Averaged over all shifts, the even-parity ones stay in phase.
  EXPECT_NEAR(shift_consistency(subsample, f, 1), 5.0 / 9.0, 1e-12);
  EXPECT_GT(shift_consistency(blurred, f, 1), shift_consistency(subsample, f, 1));
}

TEST(ShiftConsistency, ConstantInputScoresOne) {
  const FeatureMap f(1, 16, 16, 1.0);
  EXPECT_NEAR(shift_consistency(subsample, f, 2), 1.0, 1e-12);
  for (int n : {2, 3, 5}) {
    const Pipeline p = [n](const FeatureMap& x) { return blur_downsample(x, BlurKernel(n)); };
    EXPECT_NEAR(shift_consistency(p, f, 2), 1.0, 1e-12);
  }
  EXPECT_THROW(shift_consistency(subsample, f, -1), InvalidInput);
}
