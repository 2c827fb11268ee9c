#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "propnet/error.hpp"
#include "propnet/heatmap_codec.hpp"
#include "propnet/propagation.hpp"
#include "propnet/random.hpp"
#include "propnet/tensor_io.hpp"
#include "test_support.hpp"

using namespace propnet;

namespace {

BoundaryScheme small_scheme() {
  return BoundaryScheme({{{0, 1, 2}, false}, {{3, 4}, false}, {{5, 5}, false}});
}

PropagationConfig small_config() {
  PropagationConfig c;
  c.num_landmarks = 6;
  c.feature_channels = 4;
  c.stack_width = 3;
  c.stack_kernel = 5;
  c.hourglass_width = 8;
  return c;
}

HeatmapStack landmark_maps(std::uint64_t seed, int size = 16) {
  Rng rng(seed);
  std::vector<Point> pts;
  for (int k = 0; k < 6; ++k) pts.push_back({rng.uniform(2, size - 3.0), rng.uniform(2, size - 3.0)});
  return encode_heatmap_points(pts, size, size, {});
}

FeatureMap random_features(std::uint64_t seed, int channels, int size = 16) {
  Rng rng(seed);
  FeatureMap f(channels, size, size);
  for (double& v : f.data()) v = rng.uniform(-1.0, 1.0);
  return f;
}

void set_center(ConvSpec& c, int o, int i, double v) { c.w(o, i, c.kernel / 2, c.kernel / 2) = v; }

std::uint64_t hash_of(const Tensor3& t) { return fnv1a64(encode_tensor(t)); }

}  // namespace

TEST(Propagation, ZeroInputsAndWeightsGiveZeroBoundaries) {
  const auto scheme = small_scheme();
  const auto w = PropagationWeights::random(small_config(), scheme, 1);
  PropagationWeights zero_bias = w;
  zero_bias.for_each_conv([](const std::string&, ConvSpec& c) {
    std::fill(c.bias.begin(), c.bias.end(), 0.0);
  });
  const HeatmapStack out = propagate_to_boundaries(HeatmapStack(6, 16, 16), zero_bias, scheme);
  EXPECT_EQ(out.channels(), 3);
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(Propagation, DeltaStackOnSingleLandmarkBoundaryIsIdentity) {
  const auto scheme = small_scheme();
  auto w = PropagationWeights::zeros(small_config(), scheme);
  // Boundary 2 repeats landmark 5; the first layer reads its first copy only.
  for (auto& layer : w.stacks[2]) set_center(layer, 0, 0, 1.0);
  const HeatmapStack lm = landmark_maps(3);
  const HeatmapStack out = propagate_to_boundaries(lm, w, scheme);
  EXPECT_EQ(slice_channels(out, 2, 1), slice_channels(lm, 5, 1));
}

TEST(Propagation, AveragingKernelMatchesConvolutionOracle) {
  const auto scheme = small_scheme();
  auto cfg = small_config();
  cfg.stack_depth = 1;
  cfg.stack_kernel = 3;
  auto w = PropagationWeights::zeros(cfg, scheme);
  ConvSpec& c = w.stacks[1][0];
  std::fill(c.weight.begin(), c.weight.end(), 1.0 / 18.0);
  const HeatmapStack lm = landmark_maps(5);
  const HeatmapStack out = propagate_to_boundaries(lm, w, scheme);

  // Box blur of the mean of maps 3 and 4, zero padded.
  Tensor3 mean(1, 16, 16);
  for (int r = 0; r < 16; ++r) {
    for (int col = 0; col < 16; ++col) mean(0, r, col) = 0.5 * (lm(3, r, col) + lm(4, r, col));
  }
  const std::vector<double> box(9, 1.0 / 9.0), bias{0.0};
  for (int r = 0; r < 16; ++r) {
    for (int col = 0; col < 16; ++col) {
      EXPECT_NEAR(out(1, r, col), oracle::conv_at(mean, box, bias, 3, 0, r, col), 1e-14);
    }
  }
}

TEST(Propagation, LinearWithoutRectifiersAndBiases) {
  const auto scheme = small_scheme();
  auto cfg = small_config();
  cfg.rectify_stacks = false;
  auto w = PropagationWeights::random(cfg, scheme, 7);
  for (auto& stack : w.stacks) {
    for (auto& layer : stack) std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  const HeatmapStack a = landmark_maps(11), b = landmark_maps(12);
  HeatmapStack scaled = a, sum = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scaled.data()[i] = 2.5 * a.data()[i];
    sum.data()[i] = a.data()[i] + b.data()[i];
  }
  const HeatmapStack fa = propagate_to_boundaries(a, w, scheme);
  const HeatmapStack fb = propagate_to_boundaries(b, w, scheme);
  const HeatmapStack fs = propagate_to_boundaries(scaled, w, scheme);
  const HeatmapStack fsum = propagate_to_boundaries(sum, w, scheme);
  for (std::size_t i = 0; i < fa.size(); ++i) {
    EXPECT_NEAR(fs.data()[i], 2.5 * fa.data()[i], 1e-12);
    EXPECT_NEAR(fsum.data()[i], fa.data()[i] + fb.data()[i], 1e-12);
  }
}

TEST(Propagation, SwappingLandmarksWithPermutedChannelsKeepsBoundary) {
  const auto scheme = small_scheme();
  const auto w = PropagationWeights::random(small_config(), scheme, 13);
  const BoundaryScheme swapped({{{1, 0, 2}, false}, {{3, 4}, false}, {{5, 5}, false}});
  auto ws = w;
  ConvSpec& first = ws.stacks[0][0];
  for (int o = 0; o < first.out_channels; ++o) {
    for (int ky = 0; ky < first.kernel; ++ky) {
      for (int kx = 0; kx < first.kernel; ++kx) std::swap(first.w(o, 0, ky, kx), first.w(o, 1, ky, kx));
    }
  }
  const HeatmapStack lm = landmark_maps(17);
  const HeatmapStack a = propagate_to_boundaries(lm, w, scheme);
  const HeatmapStack b = propagate_to_boundaries(lm, ws, swapped);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-12);
}

TEST(Propagation, FullWiringSeesEveryLandmark) {
  const auto scheme = small_scheme();
  auto cfg = small_config();
  cfg.wiring = BoundaryWiring::full;
  cfg.stack_depth = 1;
  auto w = PropagationWeights::zeros(cfg, scheme);
  EXPECT_EQ(w.stacks[2][0].in_channels, 6);
  set_center(w.stacks[2][0], 0, 0, 1.0);
  const HeatmapStack lm = landmark_maps(19);
  EXPECT_EQ(slice_channels(propagate_to_boundaries(lm, w, scheme), 2, 1), slice_channels(lm, 0, 1));
}

TEST(Propagation, MismatchedStackNamesTheBoundary) {
  const auto scheme = small_scheme();
  auto w = PropagationWeights::zeros(small_config(), scheme);
  w.stacks[1][0] = ConvSpec(3, 3, 5);
  try {
    propagate_to_boundaries(landmark_maps(1), w, scheme);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("boundary 1"), std::string::npos) << e.what();
  }
  auto missing = PropagationWeights::zeros(small_config(), scheme);
  missing.stacks.pop_back();
  EXPECT_THROW(propagate_to_boundaries(landmark_maps(1), missing, scheme), ConfigError);
  EXPECT_THROW(propagate_to_boundaries(HeatmapStack(5, 16, 16), PropagationWeights::zeros(small_config(), scheme), scheme),
               ConfigError);
}

TEST(PropagationConfig, RejectsOutOfRangeSettings) {
  auto c = small_config();
  c.stack_depth = 6;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.hourglass_width = 6;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.stack_kernel = 4;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(MultiviewBlock, ZeroWeightsArePureResidual) {
  const FeatureMap f = random_features(23, 8);
  EXPECT_EQ(multiview_block(f, MultiViewBlockSpec::zeros(8)), f);
}

TEST(MultiviewBlock, BranchWidthsSplitTheBlock) {
  const auto spec = MultiViewBlockSpec::zeros(16);
  EXPECT_EQ(spec.branch[0].out_channels, 8);
  EXPECT_EQ(spec.branch[1].in_channels, 8);
  EXPECT_EQ(spec.branch[1].out_channels, 4);
  EXPECT_EQ(spec.branch[2].out_channels, 4);
  EXPECT_THROW(MultiViewBlockSpec::zeros(6), ConfigError);
}

TEST(MultiviewBlock, DeltaBranchPassesRectifiedInputOnItsSlice) {
  const FeatureMap f = random_features(29, 8);
  auto spec = MultiViewBlockSpec::zeros(8);
  for (int i = 0; i < 4; ++i) set_center(spec.branch[0], i, i, 1.0);
  const FeatureMap out = multiview_block(f, spec);
  for (int ch = 0; ch < 8; ++ch) {
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        const double expect = ch < 4 ? f(ch, r, c) + std::max(0.0, f(ch, r, c)) : f(ch, r, c);
        EXPECT_EQ(out(ch, r, c), expect);
      }
    }
  }
}

TEST(MultiviewBlock, HierarchicalFeedReachesLastBranch) {
  const FeatureMap f = random_features(31, 4, 6);
  auto spec = MultiViewBlockSpec::zeros(4);
  set_center(spec.branch[0], 0, 0, 1.0);
  set_center(spec.branch[1], 0, 0, 1.0);
  set_center(spec.branch[2], 0, 0, 1.0);
  const FeatureMap out = multiview_block(f, spec);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      const double relu = std::max(0.0, f(0, r, c));
      EXPECT_EQ(out(0, r, c), f(0, r, c) + relu);
      EXPECT_EQ(out(1, r, c), f(1, r, c));
      EXPECT_EQ(out(2, r, c), f(2, r, c) + relu);
      EXPECT_EQ(out(3, r, c), f(3, r, c) + relu);
    }
  }
  EXPECT_THROW(multiview_block(random_features(1, 8, 6), spec), ConfigError);
}

TEST(MultiviewBlock, RandomWeightsAreDeterministic) {
  Rng rng(37);
  auto spec = MultiViewBlockSpec::zeros(8);
  for (auto& b : spec.branch) {
    for (double& v : b.weight) v = rng.uniform(-0.3, 0.3);
  }
  const FeatureMap f = random_features(41, 8);
  EXPECT_EQ(multiview_block(f, spec), multiview_block(f, spec));
}

TEST(AttentionHourglass, ZeroWeightsGiveHalf) {
  const auto scheme = small_scheme();
  const auto w = PropagationWeights::zeros(small_config(), scheme);
  const Tensor3 att = attention_hourglass(random_features(43, 4), HeatmapStack(3, 16, 16), w);
  ASSERT_EQ(att.channels(), 1);
  for (double v : att.data()) EXPECT_EQ(v, 0.5);
}

TEST(AttentionHourglass, LargeBiasSaturates) {
  const auto scheme = small_scheme();
  auto w = PropagationWeights::zeros(small_config(), scheme);
  w.hourglass.project_out.bias[0] = 20.0;
  const Tensor3 att = attention_hourglass(random_features(47, 4), HeatmapStack(3, 16, 16), w);
  for (double v : att.data()) {
    EXPECT_GT(v, 1.0 - 1e-8);
    EXPECT_LT(v, 1.0);
  }
}

TEST(AttentionHourglass, RandomWeightsStrictlyInsideUnitInterval) {
  const auto scheme = small_scheme();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto w = PropagationWeights::random(small_config(), scheme, seed);
    const FeatureMap f = random_features(seed + 100, 4);
    const HeatmapStack b = propagate_to_boundaries(landmark_maps(seed), w, scheme);
    const Tensor3 att = attention_hourglass(f, b, w);
    EXPECT_EQ(att, attention_hourglass(f, b, w));
    for (double v : att.data()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(AttentionHourglass, OddSizesKeepResolution) {
  const auto scheme = small_scheme();
  const auto w = PropagationWeights::random(small_config(), scheme, 4);
  const Tensor3 att = attention_hourglass(random_features(5, 4, 13), HeatmapStack(3, 13, 13), w);
  EXPECT_EQ(att.height(), 13);
  EXPECT_EQ(att.width(), 13);
  EXPECT_THROW(attention_hourglass(random_features(5, 4, 16), HeatmapStack(3, 13, 13), w), InvalidInput);
}

TEST(ApplyAttention, Cases) {
  const FeatureMap f = random_features(53, 3);
  EXPECT_EQ(apply_attention(f, Tensor3(1, 16, 16, 1.0)), f);
  const FeatureMap zeroed = apply_attention(f, Tensor3(1, 16, 16, 0.0));
  for (double v : zeroed.data()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(apply_attention(f, Tensor3(1, 16, 16, 0.0), AttentionMode::residual), f);

  Rng rng(59);
  Tensor3 att(1, 16, 16);
  for (double& v : att.data()) v = rng.uniform();
  const FeatureMap out = apply_attention(f, att);
  for (int ch = 0; ch < 3; ++ch) {
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) EXPECT_EQ(out(ch, r, c), f(ch, r, c) * att(0, r, c));
    }
  }
  EXPECT_THROW(apply_attention(f, Tensor3(2, 16, 16)), InvalidInput);
  EXPECT_THROW(apply_attention(f, Tensor3(1, 8, 16)), InvalidInput);
}

TEST(UpsampleNearest, RepeatsAndCrops) {
  Tensor3 t(1, 2, 2);
  t(0, 0, 0) = 1;
  t(0, 0, 1) = 2;
  t(0, 1, 0) = 3;
  t(0, 1, 1) = 4;
  const Tensor3 up = upsample_nearest(t, 4, 4);
  EXPECT_EQ(up(0, 0, 1), 1);
  EXPECT_EQ(up(0, 1, 2), 2);
  EXPECT_EQ(up(0, 3, 0), 3);
  EXPECT_EQ(up(0, 3, 3), 4);
  const Tensor3 odd = upsample_nearest(t, 3, 3);
  EXPECT_EQ(odd(0, 2, 2), 4);
}

TEST(ForwardModule, ZeroWeightsHalveFeatures) {
  const auto scheme = small_scheme();
  const auto w = PropagationWeights::zeros(small_config(), scheme);
  const FeatureMap f = random_features(61, 4);
  const ModuleOutput out = forward_module(f, landmark_maps(2), w, scheme);
  for (double v : out.boundaries.data()) EXPECT_EQ(v, 0.0);
  for (double v : out.attention.data()) EXPECT_EQ(v, 0.5);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(out.features.data()[i], 0.5 * f.data()[i]);
}

TEST(ForwardModule, ShapesPreserved) {
  const auto scheme = small_scheme();
  const auto w = PropagationWeights::random(small_config(), scheme, 67);
  const ModuleOutput out = forward_module(random_features(1, 4), landmark_maps(1), w, scheme);
  EXPECT_EQ(out.boundaries.channels(), 3);
  EXPECT_EQ(out.boundaries.height(), 16);
  EXPECT_TRUE(out.features.same_shape(random_features(1, 4)));
  EXPECT_THROW(forward_module(random_features(1, 5), landmark_maps(1), w, scheme), ConfigError);
}

TEST(ForwardModule, GoldenHashesForFixedSeed) {
  // Frozen output hashes; a change means the numerics of the forward pass moved.
  const auto scheme = small_scheme();
  const auto w = PropagationWeights::random(small_config(), scheme, 2024);
  const ModuleOutput out = forward_module(random_features(7, 4), landmark_maps(7), w, scheme);
  EXPECT_EQ(hex64(hash_of(out.boundaries)), "671cc0dd2c24ce60");
  EXPECT_EQ(hex64(hash_of(out.attention)), "171db26fe33769de");
  EXPECT_EQ(hex64(hash_of(out.features)), "6cf05e5d301749ca");
}

TEST(WeightsIo, SaveLoadRoundTrip) {
  const auto scheme = small_scheme();
  auto cfg = small_config();
  cfg.attention = AttentionMode::residual;
  cfg.wiring = BoundaryWiring::full;
  auto w = PropagationWeights::random(cfg, scheme, 71);
  // Stored as float32, so start from float-representable values.
  w.for_each_conv([](const std::string&, ConvSpec& c) {
    for (double& v : c.weight) v = static_cast<float>(v);
    for (double& v : c.bias) v = static_cast<float>(v);
  });
  const auto dir = test_support::scratch_dir("weights");
  save_weights(dir.string(), w);
  const PropagationWeights back = load_weights(dir.string(), scheme);
  EXPECT_EQ(back.config.attention, AttentionMode::residual);
  EXPECT_EQ(back.config.wiring, BoundaryWiring::full);
  EXPECT_EQ(back.config.hourglass_width, 8);
  std::vector<std::string> names;
  w.for_each_conv([&](const std::string& name, const ConvSpec&) { names.push_back(name); });
  std::size_t i = 0;
  back.for_each_conv([&](const std::string& name, const ConvSpec& c) {
    ASSERT_LT(i, names.size());
    EXPECT_EQ(name, names[i]);
    ++i;
    (void)c;
  });
  EXPECT_EQ(i, names.size());
  const FeatureMap f = random_features(3, 4);
  const HeatmapStack lm = landmark_maps(3);
  EXPECT_EQ(forward_module(f, lm, back, scheme).features, forward_module(f, lm, w, scheme).features);

  const BoundaryScheme other({{{0, 1}, false}, {{3, 4}, false}, {{5, 5}, false}});
  cfg.wiring = BoundaryWiring::subset;
  save_weights(dir.string(), PropagationWeights::zeros(cfg, scheme));
  EXPECT_THROW(load_weights(dir.string(), other), ConfigError);
}
