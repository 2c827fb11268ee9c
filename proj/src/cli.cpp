#include "propnet/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "propnet/error.hpp"
#include "propnet/random.hpp"
#include "propnet/shift_ops.hpp"
#include "propnet/synthetic.hpp"
#include "propnet/tensor_io.hpp"

namespace propnet::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string record_stem(std::size_t index) {
  std::string digits = std::to_string(index);
  return std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') + digits;
}

// ---------------------------------------------------------------------------
// gradient check helpers

struct GradBatch {
  std::vector<HeatmapStack> gt_lm, pred_lm, gt_bd, pred_bd;
  BatchAttributes attrs;
};

// Ground truth rendered from random points so it has the usual mix of exact
// zeros, a peak of 1 and intermediate values. Predictions sit between 0.02
// and 0.9 away from it and never within 1e-3 of the branch switch.
HeatmapStack random_gt(Rng& rng, int maps, int size) {
  std::vector<Point> pts;
  for (int k = 0; k < maps; ++k) pts.push_back({rng.uniform(1.0, size - 2.0), rng.uniform(1.0, size - 2.0)});
  return encode_heatmap_points(pts, size, size, GaussianParams{});
}

HeatmapStack random_pred(Rng& rng, const HeatmapStack& gt, double theta) {
  HeatmapStack pred = gt;
  for (double& v : pred.data()) {
    double d = 0.0;
    do {
      d = rng.uniform(0.02, 0.9);
    } while (std::abs(d - theta) < 1e-3);
    v += rng.bernoulli(0.5) ? d : -d;
  }
  return pred;
}

GradBatch make_grad_batch(Rng& rng, const LossParams& p) {
  constexpr int kSamples = 3, kLandmarks = 4, kBoundaries = 3, kSize = 12;
  GradBatch b;
  std::vector<AttributeFlags> rows;
  for (int n = 0; n < kSamples; ++n) {
    b.gt_lm.push_back(random_gt(rng, kLandmarks, kSize));
    b.pred_lm.push_back(random_pred(rng, b.gt_lm.back(), p.theta));
    b.gt_bd.push_back(random_gt(rng, kBoundaries, kSize));
    b.pred_bd.push_back(random_pred(rng, b.gt_bd.back(), p.theta));
    AttributeFlags a{};
    for (auto& bit : a) bit = rng.bernoulli(0.4) ? 1 : 0;
    rows.push_back(a);
  }
  b.attrs = BatchAttributes(std::move(rows));
  return b;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return scale == 0.0 ? 0.0 : std::abs(analytic - numeric) / scale;
}

struct PixelRef {
  bool boundary;
  int sample;
  std::size_t index;
};

PixelRef pick_pixel(Rng& rng, const GradBatch& b, bool boundary) {
  const auto& stacks = boundary ? b.pred_bd : b.pred_lm;
  const int n = static_cast<int>(rng.uniform_int(0, static_cast<int>(stacks.size()) - 1));
  const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(stacks[n].size()) - 1));
  return {boundary, n, i};
}

// ---------------------------------------------------------------------------
// fit-toy helpers

// Adam over a list of tensors, state kept per tensor.
struct Adam {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<Tensor3> m, v;
  int t = 0;

  void step(std::vector<Tensor3*>& params, const std::vector<const Tensor3*>& grads, double lr) {
    if (m.empty()) {
      for (const Tensor3* p : params) {
        m.emplace_back(p->channels(), p->height(), p->width());
        v.emplace_back(p->channels(), p->height(), p->width());
      }
    }
    ++t;
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
      double* x = params[k]->data().data();
      const double* g = grads[k]->data().data();
      double* mk = m[k].data().data();
      double* vk = v[k].data().data();
      const std::size_t n = params[k]->size();
      for (std::size_t i = 0; i < n; ++i) {
        mk[i] = beta1 * mk[i] + (1.0 - beta1) * g[i];
        vk[i] = beta2 * vk[i] + (1.0 - beta2) * g[i] * g[i];
        x[i] -= lr * (mk[i] / c1) / (std::sqrt(vk[i] / c2) + eps);
      }
    }
  }
};

std::vector<LandmarkSet> toy_samples(const FitToyOptions& opt, const HeatmapGeometry& geom) {
  std::vector<LandmarkSet> samples;
  if (opt.annotations.empty()) {
    Rng rng(opt.seed);
    for (int n = 0; n < opt.samples; ++n) samples.push_back(synthetic_face(rng, geom.input_size));
    return samples;
  }
  const auto records = load_annotations(opt.annotations, opt.num_points);
  if (records.empty()) throw InvalidInput("no records");
  for (int n = 0; n < opt.samples && n < static_cast<int>(records.size()); ++n) {
    samples.push_back(crop_resize(records[n], geom.input_size, 0.1).sample);
  }
  return samples;
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// gen-gt

int cmd_gen_gt(const GenGtOptions& opt, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    opt.gaussian.validate();
    opt.geometry.validate();
    const BoundaryScheme scheme = load_boundary_scheme(opt.scheme);
    scheme.validate(opt.num_points);

    std::ifstream in(opt.annotations);
    if (!in) throw InvalidInput("cannot open annotations '" + opt.annotations + "'");
    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    if (ec || !fs::is_directory(opt.out_dir)) {
      throw InvalidInput("cannot create output directory '" + opt.out_dir + "'");
    }
    std::ofstream manifest(fs::path(opt.out_dir) / "manifest.tsv", std::ios::binary);
    if (!manifest) throw InvalidInput("cannot write manifest in '" + opt.out_dir + "'");
    manifest << "record\timage_id\tkind\tfile\tfnv1a64\n";

    std::string line;
    std::size_t line_no = 0, records = 0, failed = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::size_t index = records++;
      try {
        const LandmarkSet raw = parse_wflw_line(line, opt.num_points);
        const LandmarkSet sample = crop_resize(raw, opt.geometry.input_size, opt.margin).sample;
        const HeatmapStack lm = encode_landmarks(sample, opt.geometry, opt.gaussian);
        const HeatmapStack bd = rasterize_boundaries(sample, scheme, opt.geometry, opt.gaussian);
        for (const auto& [kind, tensor] : {std::pair{"landmarks", &lm}, std::pair{"boundaries", &bd}}) {
          const std::string file = record_stem(index) + "." + kind + ".hmk";
          const auto bytes = encode_tensor(*tensor);
          std::ofstream f(fs::path(opt.out_dir) / file, std::ios::binary);
          f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
          if (!f) throw InvalidInput("cannot write '" + file + "'");
          manifest << index << '\t' << sample.image_id << '\t' << kind << '\t' << file << '\t'
                   << hex64(fnv1a64(bytes)) << '\n';
        }
      } catch (const std::exception& e) {
        ++failed;
        log << "line " << line_no << ": " << e.what() << '\n';
      }
    }
    if (records == 0) throw InvalidInput("no records in '" + opt.annotations + "'");
    out << "records\t" << records << '\n';
    out << "written\t" << (records - failed) << '\n';
    out << "failed\t" << failed << '\n';
    return failed == 0 ? kExitOk : kExitInputError;
  });
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    const NormSpec norm = parse_norm_spec(opt.norm);
    const auto preds = load_predictions(opt.predictions, opt.num_points);
    const auto gts = load_annotations(opt.ground_truth, opt.num_points);
    if (preds.size() != gts.size()) {
      throw InvalidInput("count mismatch: " + std::to_string(preds.size()) + " predictions, " +
                         std::to_string(gts.size()) + " ground-truth records");
    }
    const EvalReport report = evaluate(preds, gts, norm, opt.thresholds,
                                       BatchAttributes::from_samples(gts), opt.ced_resolution);
    write_report(out, report);
    if (!opt.ced_out.empty()) {
      std::ofstream f(opt.ced_out, std::ios::binary);
      if (!f) throw InvalidInput("cannot write CED file '" + opt.ced_out + "'");
      write_ced(f, report.ced);
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// check-grad

double GradCheckResult::worst() const {
  return std::max({landmark_max_rel, boundary_max_rel, total_max_rel});
}

GradCheckResult check_gradients(const GradCheckOptions& opt) {
  opt.params.validate();
  if (opt.trials < 1) throw InvalidInput("check-grad: trials must be >= 1");
  if (!(opt.step > 0.0)) throw InvalidInput("check-grad: step must be positive");
  const LossParams& p = opt.params;
  Rng rng(opt.seed);
  GradBatch b = make_grad_batch(rng, p);
  const double flip = opt.inject_sign_bug ? -1.0 : 1.0;

  const auto lm_grad = landmark_loss_grad(b.gt_lm, b.pred_lm, b.attrs, p);
  const auto bd_grad = boundary_loss_grad(b.gt_bd, b.pred_bd, b.attrs, p);
  const HeatmapBatch gt{b.gt_lm, b.gt_bd};
  const HeatmapBatch total_grad = total_loss_grad(gt, HeatmapBatch{b.pred_lm, b.pred_bd}, b.attrs, p);

  auto central = [&](const PixelRef& px, auto&& loss) {
    double& x = (px.boundary ? b.pred_bd : b.pred_lm)[px.sample].data()[px.index];
    const double saved = x;
    x = saved + opt.step;
    const double up = loss();
    x = saved - opt.step;
    const double down = loss();
    x = saved;
    return (up - down) / (2.0 * opt.step);
  };

  GradCheckResult r;
  r.trials = opt.trials;
  for (int t = 0; t < opt.trials; ++t) {
    const PixelRef px = pick_pixel(rng, b, false);
    const double fd = central(px, [&] { return landmark_loss(b.gt_lm, b.pred_lm, b.attrs, p); });
    const double an = flip * lm_grad[px.sample].data()[px.index];
    r.landmark_max_rel = std::max(r.landmark_max_rel, relative_error(an, fd));
  }
  for (int t = 0; t < opt.trials; ++t) {
    const PixelRef px = pick_pixel(rng, b, true);
    const double fd = central(px, [&] { return boundary_loss(b.gt_bd, b.pred_bd, b.attrs, p); });
    const double an = flip * bd_grad[px.sample].data()[px.index];
    r.boundary_max_rel = std::max(r.boundary_max_rel, relative_error(an, fd));
  }
  for (int t = 0; t < opt.trials; ++t) {
    const PixelRef px = pick_pixel(rng, b, rng.bernoulli(0.5));
    const double fd = central(px, [&] {
      return total_loss(gt, HeatmapBatch{b.pred_lm, b.pred_bd}, b.attrs, p).total;
    });
    const auto& g = px.boundary ? total_grad.boundaries : total_grad.landmarks;
    const double an = flip * g[px.sample].data()[px.index];
    r.total_max_rel = std::max(r.total_max_rel, relative_error(an, fd));
  }
  return r;
}

int cmd_check_grad(const GradCheckOptions& opt, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    const GradCheckResult r = check_gradients(opt);
    out << "landmark_loss\t" << fmt(r.landmark_max_rel) << '\n';
    out << "boundary_loss\t" << fmt(r.boundary_max_rel) << '\n';
    out << "total_loss\t" << fmt(r.total_max_rel) << '\n';
    const bool ok = r.worst() <= opt.tolerance;
    out << "status\t" << (ok ? "pass" : "fail") << '\n';
    if (!ok) {
      log << "gradient check failed: max relative error " << fmt(r.worst()) << " > "
          << fmt(opt.tolerance) << '\n';
    }
    return ok ? kExitOk : kExitVerificationFailed;
  });
}

// ---------------------------------------------------------------------------
// check-shift

ShiftCheckResult check_shift(const ShiftCheckOptions& opt) {
  if (opt.trials < 1) throw InvalidInput("check-shift: trials must be >= 1");
  if (opt.size < 4 || opt.channels < 1) throw InvalidInput("check-shift: input too small");
  if (opt.kernel_sizes.empty()) throw InvalidInput("check-shift: no kernel sizes");

  std::vector<Pipeline> blurred;
  for (int n : opt.kernel_sizes) {
    const BlurKernel k(n);
    blurred.push_back([k](const FeatureMap& f) { return blur_downsample(f, k, Padding::circular); });
  }
  const Pipeline plain = [](const FeatureMap& f) { return subsample(f); };

  ShiftCheckResult r;
  r.blurred.assign(blurred.size(), {});
  r.wins.assign(blurred.size(), 0);
  Rng rng(opt.seed);
  for (int t = 0; t < opt.trials; ++t) {
    const FeatureMap f = lowpass_noise(rng, opt.channels, opt.size, opt.size, opt.input_sigma);
    const double base = shift_consistency(plain, f, opt.max_shift);
    r.plain.push_back(base);
    for (std::size_t k = 0; k < blurred.size(); ++k) {
      const double s = shift_consistency(blurred[k], f, opt.max_shift);
      r.blurred[k].push_back(s);
      if (s > base) ++r.wins[k];
    }
  }

  FeatureMap checker(opt.channels, opt.size, opt.size);
  FeatureMap constant(opt.channels, opt.size, opt.size, 1.0);
  for (int c = 0; c < opt.channels; ++c) {
    for (int y = 0; y < opt.size; ++y) {
      for (int x = 0; x < opt.size; ++x) checker(c, y, x) = (x + y) % 2 == 0 ? 1.0 : -1.0;
    }
  }
  r.checkerboard_plain = shift_consistency(plain, checker, opt.max_shift);
  r.constant_plain = shift_consistency(plain, constant, opt.max_shift);
  for (const auto& pipe : blurred) {
    r.checkerboard_blurred.push_back(shift_consistency(pipe, checker, opt.max_shift));
    r.constant_blurred.push_back(shift_consistency(pipe, constant, opt.max_shift));
  }
  return r;
}

int cmd_check_shift(const ShiftCheckOptions& opt, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    const ShiftCheckResult r = check_shift(opt);
    auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    out << "kernel\tmean_score\twins\tcheckerboard\tconstant\n";
    const double plain_mean = mean(r.plain);
    out << "none\t" << fmt(plain_mean) << "\t-\t" << fmt(r.checkerboard_plain) << '\t'
        << fmt(r.constant_plain) << '\n';
    bool ok = true;
    for (std::size_t k = 0; k < opt.kernel_sizes.size(); ++k) {
      const double m = mean(r.blurred[k]);
      out << opt.kernel_sizes[k] << '\t' << fmt(m) << '\t' << r.wins[k] << '/' << opt.trials << '\t'
          << fmt(r.checkerboard_blurred[k]) << '\t' << fmt(r.constant_blurred[k]) << '\n';
      if (m < plain_mean || r.checkerboard_blurred[k] < r.checkerboard_plain) {
        ok = false;
        log << "blur kernel " << opt.kernel_sizes[k] << " scores below plain subsampling\n";
      }
    }
    return ok ? kExitOk : kExitVerificationFailed;
  });
}

// ---------------------------------------------------------------------------
// fit-toy

FitToyResult fit_toy(const FitToyOptions& opt, const BoundaryScheme& scheme) {
  opt.params.validate();
  if (opt.samples < 1) throw InvalidInput("fit-toy: samples must be >= 1");
  if (opt.steps < 0) throw InvalidInput("fit-toy: steps must be >= 0");
  if (!(opt.lr > 0.0)) throw InvalidInput("fit-toy: lr must be positive");
  scheme.validate(opt.num_points);

  const HeatmapGeometry geom;
  const GaussianParams gauss;
  const auto samples = toy_samples(opt, geom);
  HeatmapBatch gt, pred;
  for (const auto& s : samples) {
    gt.landmarks.push_back(encode_landmarks(s, geom, gauss));
    gt.boundaries.push_back(rasterize_boundaries(s, scheme, geom, gauss));
  }
  const BatchAttributes attrs = BatchAttributes::from_samples(samples);
  if (opt.init_at_gt) {
    pred = gt;
  } else {
    for (const auto& t : gt.landmarks) pred.landmarks.emplace_back(t.channels(), t.height(), t.width(), opt.init);
    for (const auto& t : gt.boundaries) pred.boundaries.emplace_back(t.channels(), t.height(), t.width(), opt.init);
  }

  std::vector<Tensor3*> params;
  for (auto* stacks : {&pred.landmarks, &pred.boundaries}) {
    for (auto& t : *stacks) params.push_back(&t);
  }

  FitToyResult r;
  Adam adam;
  for (int step = 0; step < opt.steps; ++step) {
    r.loss.push_back(total_loss(gt, pred, attrs, opt.params).total);
    const HeatmapBatch g = total_loss_grad(gt, pred, attrs, opt.params);
    std::vector<const Tensor3*> grads;
    for (auto* stacks : {&g.landmarks, &g.boundaries}) {
      for (const auto& t : *stacks) grads.push_back(&t);
    }
    if (opt.adam) {
      adam.step(params, grads, opt.lr);
    } else {
      for (std::size_t k = 0; k < params.size(); ++k) {
        auto& x = params[k]->data();
        const auto& gk = grads[k]->data();
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= opt.lr * gk[i];
      }
    }
  }
  r.loss.push_back(total_loss(gt, pred, attrs, opt.params).total);
  r.steps = opt.steps;

  double nme_sum = 0.0;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    double err = 0.0;
    int counted = 0;
    for (int k = 0; k < pred.landmarks[n].channels(); ++k) {
      const Point target = geom.to_heatmap(samples[n].points[k]);
      if (!samples[n].is_valid(k) || !on_grid(target, geom.height, geom.width)) continue;
      const Point found = decode_heatmap(pred.landmarks[n].view(k));
      err += std::hypot(found.x - target.x, found.y - target.y);
      ++counted;
    }
    if (counted == 0) throw DegenerateSample("fit-toy: sample without encodable landmarks");
    nme_sum += err / counted / geom.width;
  }
  r.final_nme = nme_sum / static_cast<double>(samples.size());
  return r;
}

int cmd_fit_toy(const FitToyOptions& opt, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    const BoundaryScheme scheme = load_boundary_scheme(opt.scheme);
    const FitToyResult r = fit_toy(opt, scheme);
    out << "step\tloss\n";
    for (std::size_t i = 0; i < r.loss.size(); ++i) out << i << '\t' << fmt(r.loss[i]) << '\n';
    out << "final_nme\t" << fmt(r.final_nme) << '\n';
    const double ratio = r.loss.front() == 0.0 ? 0.0 : r.loss.back() / r.loss.front();
    log << "loss " << fmt(r.loss.front()) << " -> " << fmt(r.loss.back()) << " (ratio "
        << fmt(ratio) << "), decoded NME " << fmt(r.final_nme) << '\n';
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// stats

int cmd_stats(const std::string& annotations, int num_points, std::ostream& out,
              std::ostream& log) {
  return guarded(log, [&] {
    const auto samples = load_annotations(annotations, num_points);
    if (samples.empty()) throw InvalidInput("no records in '" + annotations + "'");
    const auto fractions = attribute_fractions(samples);
    out << "samples\t" << samples.size() << '\n';
    for (int c = 0; c < kNumAttributes; ++c) {
      out << attribute_name(c) << '\t' << fmt(fractions[c]) << '\n';
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// command line

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log) {
  CLI::App app{"Facial-landmark heatmap toolkit: ground truth, losses, metrics, self-checks"};
  app.require_subcommand(1);

  RunConfig cfg;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "Seed for every random draw")->capture_default_str();
    sub->add_option("--points", cfg.num_points, "Landmarks per record")->capture_default_str();
  };

  GenGtOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-gt", "Render landmark and boundary heatmaps per record");
  gen_cmd->add_option("annotations", cfg.input, "Annotation file")->required();
  gen_cmd->add_option("--scheme", cfg.scheme, "Boundary scheme file")->required();
  gen_cmd->add_option("--out", cfg.out, "Output directory")->required();
  gen_cmd->add_option("--margin", gen.margin, "Crop margin as a fraction of the bbox")->capture_default_str();
  gen_cmd->add_option("--sigma", gen.gaussian.sigma, "Gaussian sigma in heatmap pixels")->capture_default_str();
  common(gen_cmd);

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "NME, failure rate, AUC and CED of predictions");
  eval_cmd->add_option("predictions", cfg.input, "Prediction file")->required();
  eval_cmd->add_option("ground_truth", cfg.ground_truth, "Annotation file")->required();
  eval_cmd->add_option("--norm", cfg.norm, "inter-ocular:i,j | inter-pupil:a,b|c,d | fixed:d | file")
      ->capture_default_str();
  eval_cmd->add_option("--threshold", cfg.thresholds, "Failure threshold (repeatable)");
  eval_cmd->add_option("--out", cfg.out, "CED points file");
  eval_cmd->add_option("--ced-resolution", ev.ced_resolution, "CED sample count")->capture_default_str();
  common(eval_cmd);

  GradCheckOptions grad;
  auto* grad_cmd = app.add_subcommand("check-grad", "Finite-difference check of the loss gradients");
  grad_cmd->add_option("--loss-params", cfg.loss_params, "Loss parameter file");
  grad_cmd->add_option("--trials", grad.trials, "Pixels per loss")->capture_default_str();
  grad_cmd->add_flag("--inject-sign-bug", grad.inject_sign_bug, "Flip the analytic gradient (self-test)");
  common(grad_cmd);

  ShiftCheckOptions shift;
  auto* shift_cmd = app.add_subcommand("check-shift", "Shift consistency of blur vs plain downsampling");
  shift_cmd->add_option("--kernel", shift.kernel_sizes, "Blur kernel sizes")->capture_default_str();
  shift_cmd->add_option("--trials", shift.trials, "Random inputs")->capture_default_str();
  shift_cmd->add_option("--size", shift.size, "Input side length")->capture_default_str();
  shift_cmd->add_option("--max-shift", shift.max_shift, "Largest shift tested")->capture_default_str();
  common(shift_cmd);

  FitToyOptions toy;
  std::string optimizer = "adam";
  auto* toy_cmd = app.add_subcommand("fit-toy", "Descend the total loss on free heatmaps");
  toy_cmd->add_option("--annotations", cfg.input, "Annotation file (default: synthetic faces)");
  toy_cmd->add_option("--scheme", cfg.scheme, "Boundary scheme file")->required();
  toy_cmd->add_option("--loss-params", cfg.loss_params, "Loss parameter file");
  toy_cmd->add_option("--samples", toy.samples, "Samples in the toy set")->capture_default_str();
  toy_cmd->add_option("--steps", toy.steps, "Optimizer steps")->capture_default_str();
  toy_cmd->add_option("--lr", toy.lr, "Learning rate")->capture_default_str();
  toy_cmd->add_option("--optimizer", optimizer, "adam or sgd")
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
  toy_cmd->add_flag("--init-at-gt", toy.init_at_gt, "Start from the ground truth");
  common(toy_cmd);

  auto* stats_cmd = app.add_subcommand("stats", "Per-attribute fractions of an annotation file");
  stats_cmd->add_option("annotations", cfg.input, "Annotation file")->required();
  common(stats_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, log);
    return code == 0 ? kExitOk : kExitInputError;
  }

  return guarded(log, [&]() -> int {
    LossParams params;
    if (!cfg.loss_params.empty()) params = load_loss_params(cfg.loss_params);

    if (gen_cmd->parsed()) {
      gen.annotations = cfg.input;
      gen.scheme = cfg.scheme;
      gen.out_dir = cfg.out;
      gen.num_points = cfg.num_points;
      return cmd_gen_gt(gen, out, log);
    }
    if (eval_cmd->parsed()) {
      ev.predictions = cfg.input;
      ev.ground_truth = cfg.ground_truth;
      ev.norm = cfg.norm;
      if (!cfg.thresholds.empty()) ev.thresholds = cfg.thresholds;
      ev.ced_out = cfg.out;
      ev.num_points = cfg.num_points;
      return cmd_eval(ev, out, log);
    }
    if (grad_cmd->parsed()) {
      grad.params = params;
      grad.seed = cfg.seed;
      return cmd_check_grad(grad, out, log);
    }
    if (shift_cmd->parsed()) {
      shift.seed = cfg.seed;
      return cmd_check_shift(shift, out, log);
    }
    if (toy_cmd->parsed()) {
      toy.annotations = cfg.input;
      toy.scheme = cfg.scheme;
      toy.params = params;
      toy.seed = cfg.seed;
      toy.num_points = cfg.num_points;
      toy.adam = optimizer == "adam";
      return cmd_fit_toy(toy, out, log);
    }
    return cmd_stats(cfg.input, cfg.num_points, out, log);
  });
}

}  // namespace propnet::cli
