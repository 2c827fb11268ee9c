#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "propnet/heatmap_codec.hpp"
#include "propnet/kernels.hpp"
#include "propnet/tensor.hpp"

namespace propnet {

// Which landmark maps feed boundary m's convolution stack.
enum class BoundaryWiring { subset, full };

// How the attention map modulates features.
enum class AttentionMode {
  multiplicative,  // f * att
  residual,        // f * (1 + att)
};

struct PropagationConfig {
  int num_landmarks = 98;
  int feature_channels = 256;
  int stack_depth = 3;   // convolutions per boundary stack, 1..5
  int stack_width = 8;   // hidden channels inside a stack
  int stack_kernel = 7;
  int hourglass_width = 32;  // multiple of 4
  int blur_size = 3;
  bool rectify_stacks = true;
  BoundaryWiring wiring = BoundaryWiring::subset;
  AttentionMode attention = AttentionMode::multiplicative;

  void validate() const;
};

// Hierarchical, parallel, multi-scale residual block of width w: three 3x3
// branches of widths w/2, w/4, w/4, each fed by the previous one, with
// pre-activation rectifiers; output = input + concat(branches).
struct MultiViewBlockSpec {
  std::array<ConvSpec, 3> branch;

  static MultiViewBlockSpec zeros(int width);
  int width() const { return branch[0].in_channels; }
  void validate() const;
};

// Two-level hourglass producing a single-channel attention logit map.
struct HourglassWeights {
  ConvSpec project_in;  // (F + M) -> w, 1x1
  MultiViewBlockSpec skip0;
  MultiViewBlockSpec down1;
  MultiViewBlockSpec skip1;
  MultiViewBlockSpec bottom;
  MultiViewBlockSpec up1;
  MultiViewBlockSpec up0;
  ConvSpec project_out;  // w -> 1, 1x1
};

struct PropagationWeights {
  PropagationConfig config;
  std::vector<std::vector<ConvSpec>> stacks;  // one conv stack per boundary
  HourglassWeights hourglass;

  // All weights and biases zero, shapes fitted to config and scheme.
  static PropagationWeights zeros(const PropagationConfig& config, const BoundaryScheme& scheme);
  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from a fixed seed.
  static PropagationWeights random(const PropagationConfig& config, const BoundaryScheme& scheme,
                                   std::uint64_t seed);

  // Throws ConfigError naming the offending boundary or parameter.
  void validate(const BoundaryScheme& scheme) const;

  // Visits every convolution with a stable name, in a fixed order.
  void for_each_conv(const std::function<void(const std::string&, ConvSpec&)>& fn);
  void for_each_conv(const std::function<void(const std::string&, const ConvSpec&)>& fn) const;
};

// Landmark heatmaps (K maps) -> boundary heatmaps (M maps).
HeatmapStack propagate_to_boundaries(const HeatmapStack& landmarks, const PropagationWeights& w,
                                     const BoundaryScheme& scheme);

FeatureMap multiview_block(const FeatureMap& f, const MultiViewBlockSpec& spec);

// Sigmoid attention map (1 channel) from features and boundary maps.
Tensor3 attention_hourglass(const FeatureMap& features, const HeatmapStack& boundaries,
                            const PropagationWeights& w);

FeatureMap apply_attention(const FeatureMap& features, const Tensor3& attention,
                           AttentionMode mode = AttentionMode::multiplicative);

struct ModuleOutput {
  HeatmapStack boundaries;
  Tensor3 attention;
  FeatureMap features;
};

ModuleOutput forward_module(const FeatureMap& features, const HeatmapStack& landmarks,
                            const PropagationWeights& w, const BoundaryScheme& scheme);

// Nearest-neighbour x2 upsampling cropped to (height, width).
Tensor3 upsample_nearest(const Tensor3& t, int height, int width);

// Weight directory: one HMK1 file per parameter plus manifest.tsv with
// `config<TAB>key<TAB>value` and `param<TAB>name<TAB>shape<TAB>file` rows.
void save_weights(const std::string& dir, const PropagationWeights& w);
PropagationWeights load_weights(const std::string& dir, const BoundaryScheme& scheme);

}  // namespace propnet
