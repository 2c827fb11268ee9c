#include "propnet/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "propnet/error.hpp"
#include "propnet/random.hpp"
#include "propnet/shift_ops.hpp"
#include "propnet/tensor_io.hpp"

namespace propnet {

namespace {

void relu_inplace(Tensor3& t) {
  for (double& v : t.data()) v = v > 0.0 ? v : 0.0;
}

Tensor3 relu(Tensor3 t) {
  relu_inplace(t);
  return t;
}

double logistic(double x) {
  // Split on sign so exp() never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

int stack_inputs(const PropagationConfig& cfg, const BoundarySpec& spec) {
  return cfg.wiring == BoundaryWiring::full ? cfg.num_landmarks
                                            : static_cast<int>(spec.indices.size());
}

std::vector<ConvSpec> zero_stack(const PropagationConfig& cfg, int inputs) {
  std::vector<ConvSpec> stack;
  for (int l = 0; l < cfg.stack_depth; ++l) {
    const int in = l == 0 ? inputs : cfg.stack_width;
    const int out = l == cfg.stack_depth - 1 ? 1 : cfg.stack_width;
    stack.emplace_back(in, out, cfg.stack_kernel);
  }
  return stack;
}

void check_same_shape(const ConvSpec& got, const ConvSpec& want, const std::string& name) {
  if (got.in_channels != want.in_channels || got.out_channels != want.out_channels ||
      got.kernel != want.kernel) {
    throw ConfigError(name + ": shape " + std::to_string(got.out_channels) + "x" +
                      std::to_string(got.in_channels) + "x" + std::to_string(got.kernel) +
                      " does not match expected " + std::to_string(want.out_channels) + "x" +
                      std::to_string(want.in_channels) + "x" + std::to_string(want.kernel));
  }
  got.validate();
}

template <typename Weights, typename Fn>
void visit_convs(Weights& w, Fn&& fn) {
  for (std::size_t m = 0; m < w.stacks.size(); ++m) {
    for (std::size_t l = 0; l < w.stacks[m].size(); ++l) {
      fn("stack." + std::to_string(m) + "." + std::to_string(l), w.stacks[m][l]);
    }
  }
  auto& hg = w.hourglass;
  fn("hourglass.project_in", hg.project_in);
  const std::pair<const char*, decltype(&hg.skip0)> blocks[] = {
      {"skip0", &hg.skip0}, {"down1", &hg.down1}, {"skip1", &hg.skip1},
      {"bottom", &hg.bottom}, {"up1", &hg.up1},   {"up0", &hg.up0}};
  for (const auto& [name, block] : blocks) {
    for (int b = 0; b < 3; ++b) {
      fn(std::string("hourglass.") + name + ".branch" + std::to_string(b), block->branch[b]);
    }
  }
  fn("hourglass.project_out", hg.project_out);
}

std::string config_value(const std::map<std::string, std::string>& cfg, const std::string& key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) throw ConfigError("weights manifest: missing config key '" + key + "'");
  return it->second;
}

}  // namespace

void PropagationConfig::validate() const {
  if (num_landmarks <= 0 || feature_channels <= 0) {
    throw ConfigError("propagation: landmark and feature counts must be positive");
  }
  if (stack_depth < 1 || stack_depth > 5) throw ConfigError("propagation: stack depth must be 1-5");
  if (stack_width <= 0) throw ConfigError("propagation: stack width must be positive");
  if (stack_kernel <= 0 || stack_kernel % 2 == 0) {
    throw ConfigError("propagation: stack kernel must be odd");
  }
  if (hourglass_width < 4 || hourglass_width % 4 != 0) {
    throw ConfigError("propagation: hourglass width must be a positive multiple of 4");
  }
  BlurKernel check(blur_size);
  (void)check;
}

MultiViewBlockSpec MultiViewBlockSpec::zeros(int width) {
  if (width < 4 || width % 4 != 0) throw ConfigError("multiview block width must be a multiple of 4");
  return {{ConvSpec(width, width / 2, 3), ConvSpec(width / 2, width / 4, 3),
           ConvSpec(width / 4, width / 4, 3)}};
}

void MultiViewBlockSpec::validate() const {
  for (const auto& c : branch) c.validate();
  const int w = width();
  if (branch[0].out_channels + branch[1].out_channels + branch[2].out_channels != w ||
      branch[1].in_channels != branch[0].out_channels ||
      branch[2].in_channels != branch[1].out_channels) {
    throw ConfigError("multiview block: branch widths do not sum to block width");
  }
}

// ---------------------------------------------------------------------------
// Weights

PropagationWeights PropagationWeights::zeros(const PropagationConfig& config,
                                             const BoundaryScheme& scheme) {
  config.validate();
  scheme.validate(config.num_landmarks);
  PropagationWeights w;
  w.config = config;
  for (const auto& spec : scheme.boundaries()) {
    w.stacks.push_back(zero_stack(config, stack_inputs(config, spec)));
  }
  const int hw = config.hourglass_width;
  auto& hg = w.hourglass;
  hg.project_in = ConvSpec(config.feature_channels + scheme.size(), hw, 1);
  for (auto* block : {&hg.skip0, &hg.down1, &hg.skip1, &hg.bottom, &hg.up1, &hg.up0}) {
    *block = MultiViewBlockSpec::zeros(hw);
  }
  hg.project_out = ConvSpec(hw, 1, 1);
  return w;
}

PropagationWeights PropagationWeights::random(const PropagationConfig& config,
                                              const BoundaryScheme& scheme, std::uint64_t seed) {
  PropagationWeights w = zeros(config, scheme);
  Rng rng(seed);
  w.for_each_conv([&](const std::string&, ConvSpec& c) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(c.in_channels) * c.kernel * c.kernel);
    for (double& v : c.weight) v = rng.uniform(-bound, bound);
    for (double& v : c.bias) v = rng.uniform(-bound, bound);
  });
  return w;
}

void PropagationWeights::validate(const BoundaryScheme& scheme) const {
  config.validate();
  scheme.validate(config.num_landmarks);
  if (static_cast<int>(stacks.size()) != scheme.size()) {
    throw ConfigError("propagation: " + std::to_string(stacks.size()) + " conv stacks for " +
                      std::to_string(scheme.size()) + " boundaries");
  }
  const PropagationWeights expected = zeros(config, scheme);
  for (int m = 0; m < scheme.size(); ++m) {
    if (stacks[m].size() != expected.stacks[m].size()) {
      throw ConfigError("propagation: boundary " + std::to_string(m) + " stack depth mismatch");
    }
    for (std::size_t l = 0; l < stacks[m].size(); ++l) {
      try {
        check_same_shape(stacks[m][l], expected.stacks[m][l], "layer " + std::to_string(l));
      } catch (const ConfigError& e) {
        throw ConfigError("propagation: boundary " + std::to_string(m) + ": " + e.what());
      }
    }
  }
  const auto& hg = hourglass;
  const auto& ex = expected.hourglass;
  check_same_shape(hg.project_in, ex.project_in, "hourglass.project_in");
  check_same_shape(hg.project_out, ex.project_out, "hourglass.project_out");
  for (const auto* block : {&hg.skip0, &hg.down1, &hg.skip1, &hg.bottom, &hg.up1, &hg.up0}) {
    block->validate();
    if (block->width() != config.hourglass_width) {
      throw ConfigError("hourglass block width does not match config");
    }
  }
}

void PropagationWeights::for_each_conv(
    const std::function<void(const std::string&, ConvSpec&)>& fn) {
  visit_convs(*this, fn);
}

void PropagationWeights::for_each_conv(
    const std::function<void(const std::string&, const ConvSpec&)>& fn) const {
  visit_convs(*this, fn);
}

// ---------------------------------------------------------------------------
// Forward pass

HeatmapStack propagate_to_boundaries(const HeatmapStack& landmarks, const PropagationWeights& w,
                                     const BoundaryScheme& scheme) {
  w.validate(scheme);
  if (landmarks.channels() != w.config.num_landmarks) {
    throw ConfigError("propagation: got " + std::to_string(landmarks.channels()) +
                      " landmark maps, scheme expects " + std::to_string(w.config.num_landmarks));
  }
  const int m_count = scheme.size();
  HeatmapStack out(m_count, landmarks.height(), landmarks.width());

#pragma omp parallel for schedule(dynamic)
  for (int m = 0; m < m_count; ++m) {
    Tensor3 x;
    if (w.config.wiring == BoundaryWiring::full) {
      x = landmarks;
    } else {
      const auto& idx = scheme[m].indices;
      x = Tensor3(static_cast<int>(idx.size()), landmarks.height(), landmarks.width());
      for (std::size_t j = 0; j < idx.size(); ++j) {
        const auto src = landmarks.channel(idx[j]);
        std::copy(src.begin(), src.end(), x.channel(static_cast<int>(j)).begin());
      }
    }
    const auto& stack = w.stacks[m];
    for (std::size_t l = 0; l < stack.size(); ++l) {
      x = kernels::conv2d(x, stack[l]);
      if (w.config.rectify_stacks && l + 1 < stack.size()) relu_inplace(x);
    }
    const auto src = x.channel(0);
    std::copy(src.begin(), src.end(), out.channel(m).begin());
  }
  return out;
}

FeatureMap multiview_block(const FeatureMap& f, const MultiViewBlockSpec& spec) {
  spec.validate();
  if (f.channels() != spec.width()) {
    throw ConfigError("multiview block: input has " + std::to_string(f.channels()) +
                      " channels, block width is " + std::to_string(spec.width()));
  }
  const Tensor3 b1 = kernels::conv2d(relu(f), spec.branch[0]);
  const Tensor3 b2 = kernels::conv2d(relu(b1), spec.branch[1]);
  const Tensor3 b3 = kernels::conv2d(relu(b2), spec.branch[2]);
  FeatureMap out = f;
  std::size_t offset = 0;
  for (const Tensor3* b : {&b1, &b2, &b3}) {
    for (std::size_t i = 0; i < b->size(); ++i) out.data()[offset + i] += b->data()[i];
    offset += b->size();
  }
  return out;
}

Tensor3 upsample_nearest(const Tensor3& t, int height, int width) {
  Tensor3 out(t.channels(), height, width);
  for (int ch = 0; ch < t.channels(); ++ch) {
    for (int r = 0; r < height; ++r) {
      const int sr = std::min(r / 2, t.height() - 1);
      for (int c = 0; c < width; ++c) out(ch, r, c) = t(ch, sr, std::min(c / 2, t.width() - 1));
    }
  }
  return out;
}

Tensor3 attention_hourglass(const FeatureMap& features, const HeatmapStack& boundaries,
                            const PropagationWeights& w) {
  if (features.height() != boundaries.height() || features.width() != boundaries.width()) {
    throw InvalidInput("attention_hourglass: features and boundaries differ in spatial size");
  }
  const auto& hg = w.hourglass;
  const BlurKernel blur(w.config.blur_size);
  auto add = [](Tensor3 a, const Tensor3& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
    return a;
  };

  const Tensor3 x0 = kernels::conv2d(concat_channels(features, boundaries), hg.project_in);
  const Tensor3 s0 = multiview_block(x0, hg.skip0);
  const Tensor3 d1 = multiview_block(blur_downsample(x0, blur), hg.down1);
  const Tensor3 s1 = multiview_block(d1, hg.skip1);
  const Tensor3 d2 = multiview_block(blur_downsample(d1, blur), hg.bottom);
  const Tensor3 u1 =
      multiview_block(add(upsample_nearest(d2, s1.height(), s1.width()), s1), hg.up1);
  const Tensor3 u0 =
      multiview_block(add(upsample_nearest(u1, s0.height(), s0.width()), s0), hg.up0);

  Tensor3 att = kernels::conv2d(u0, hg.project_out);
  for (double& v : att.data()) v = logistic(v);
  return att;
}

FeatureMap apply_attention(const FeatureMap& features, const Tensor3& attention,
                           AttentionMode mode) {
  if (attention.channels() != 1 || attention.height() != features.height() ||
      attention.width() != features.width()) {
    throw InvalidInput("apply_attention: attention must be a single map matching the features");
  }
  FeatureMap out = features;
  const auto att = attention.channel(0);
  for (int ch = 0; ch < out.channels(); ++ch) {
    auto plane = out.channel(ch);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      plane[i] *= mode == AttentionMode::residual ? 1.0 + att[i] : att[i];
    }
  }
  return out;
}

ModuleOutput forward_module(const FeatureMap& features, const HeatmapStack& landmarks,
                            const PropagationWeights& w, const BoundaryScheme& scheme) {
  if (features.channels() != w.config.feature_channels) {
    throw ConfigError("forward_module: got " + std::to_string(features.channels()) +
                      " feature channels, weights expect " +
                      std::to_string(w.config.feature_channels));
  }
  ModuleOutput out;
  out.boundaries = propagate_to_boundaries(landmarks, w, scheme);
  out.attention = attention_hourglass(features, out.boundaries, w);
  out.features = apply_attention(features, out.attention, w.config.attention);
  return out;
}

// ---------------------------------------------------------------------------
// Weight directory

void save_weights(const std::string& dir, const PropagationWeights& w) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.tsv");
  if (!manifest) throw InvalidInput("cannot write manifest in '" + dir + "'");
  const auto& c = w.config;
  manifest << "config\tnum_landmarks\t" << c.num_landmarks << "\n"
           << "config\tfeature_channels\t" << c.feature_channels << "\n"
           << "config\tstack_depth\t" << c.stack_depth << "\n"
           << "config\tstack_width\t" << c.stack_width << "\n"
           << "config\tstack_kernel\t" << c.stack_kernel << "\n"
           << "config\thourglass_width\t" << c.hourglass_width << "\n"
           << "config\tblur_size\t" << c.blur_size << "\n"
           << "config\trectify_stacks\t" << (c.rectify_stacks ? 1 : 0) << "\n"
           << "config\twiring\t" << (c.wiring == BoundaryWiring::full ? "full" : "subset") << "\n"
           << "config\tattention\t"
           << (c.attention == AttentionMode::residual ? "residual" : "multiplicative") << "\n";
  w.for_each_conv([&](const std::string& name, const ConvSpec& conv) {
    const int planes = conv.out_channels * conv.in_channels;
    Tensor3 weight(planes, conv.kernel, conv.kernel);
    std::copy(conv.weight.begin(), conv.weight.end(), weight.data().begin());
    Tensor3 bias(1, 1, conv.out_channels);
    std::copy(conv.bias.begin(), conv.bias.end(), bias.data().begin());
    const std::string wfile = name + ".weight.hmk";
    const std::string bfile = name + ".bias.hmk";
    write_tensor((fs::path(dir) / wfile).string(), weight);
    write_tensor((fs::path(dir) / bfile).string(), bias);
    manifest << "param\t" << name << ".weight\t" << conv.out_channels << "x" << conv.in_channels
             << "x" << conv.kernel << "x" << conv.kernel << "\t" << wfile << "\n";
    manifest << "param\t" << name << ".bias\t" << conv.out_channels << "\t" << bfile << "\n";
  });
}

PropagationWeights load_weights(const std::string& dir, const BoundaryScheme& scheme) {
  namespace fs = std::filesystem;
  std::ifstream manifest(fs::path(dir) / "manifest.tsv");
  if (!manifest) throw InvalidInput("cannot open manifest in '" + dir + "'");
  std::map<std::string, std::string> cfg;
  std::map<std::string, std::pair<std::string, std::string>> params;  // name -> (shape, file)
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string col; std::getline(ss, col, '\t');) cols.push_back(col);
    if (cols[0] == "config" && cols.size() == 3) {
      cfg[cols[1]] = cols[2];
    } else if (cols[0] == "param" && cols.size() == 4) {
      params[cols[1]] = {cols[2], cols[3]};
    } else {
      throw ConfigError("weights manifest: malformed row '" + line + "'");
    }
  }

  PropagationConfig c;
  auto as_int = [&](const std::string& key) {
    try {
      return std::stoi(config_value(cfg, key));
    } catch (const std::invalid_argument&) {
      throw ConfigError("weights manifest: '" + key + "' is not an integer");
    }
  };
  c.num_landmarks = as_int("num_landmarks");
  c.feature_channels = as_int("feature_channels");
  c.stack_depth = as_int("stack_depth");
  c.stack_width = as_int("stack_width");
  c.stack_kernel = as_int("stack_kernel");
  c.hourglass_width = as_int("hourglass_width");
  c.blur_size = as_int("blur_size");
  c.rectify_stacks = as_int("rectify_stacks") != 0;
  c.wiring = config_value(cfg, "wiring") == "full" ? BoundaryWiring::full : BoundaryWiring::subset;
  c.attention = config_value(cfg, "attention") == "residual" ? AttentionMode::residual
                                                              : AttentionMode::multiplicative;

  PropagationWeights w = PropagationWeights::zeros(c, scheme);
  w.for_each_conv([&](const std::string& name, ConvSpec& conv) {
    const auto wit = params.find(name + ".weight");
    const auto bit = params.find(name + ".bias");
    if (wit == params.end() || bit == params.end()) {
      throw ConfigError("weights manifest: missing parameter '" + name + "'");
    }
    const Tensor3 weight = read_tensor((fs::path(dir) / wit->second.second).string());
    const Tensor3 bias = read_tensor((fs::path(dir) / bit->second.second).string());
    if (weight.size() != conv.weight.size() || bias.size() != conv.bias.size()) {
      throw ConfigError("weights: parameter '" + name + "' has the wrong size for this scheme");
    }
    std::copy(weight.data().begin(), weight.data().end(), conv.weight.begin());
    std::copy(bias.data().begin(), bias.data().end(), conv.bias.begin());
  });
  w.validate(scheme);
  return w;
}

}  // namespace propnet
