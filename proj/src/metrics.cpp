#include "propnet/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "propnet/error.hpp"

namespace propnet {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<int> parse_index_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw InvalidInput("norm spec: bad landmark index '" + item + "'");
    }
    out.push_back(value);
  }
  return out;
}

NormSpec parse_norm_text(const std::string& raw) {
  const std::string text = trim(raw);
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidInput("norm spec: expected mode:args, got '" + text + "'");
  const std::string mode = trim(text.substr(0, colon));
  const std::string args = trim(text.substr(colon + 1));
  if (mode == "inter-ocular") {
    const auto idx = parse_index_list(args);
    if (idx.size() != 2) throw InvalidInput("norm spec: inter-ocular needs two indices");
    return NormSpec::inter_ocular(idx[0], idx[1]);
  }
  if (mode == "inter-pupil") {
    const auto bar = args.find('|');
    if (bar == std::string::npos) throw InvalidInput("norm spec: inter-pupil needs left|right");
    return NormSpec::inter_pupil(parse_index_list(args.substr(0, bar)),
                                 parse_index_list(args.substr(bar + 1)));
  }
  if (mode == "fixed") {
    double d = 0.0;
    const auto [ptr, ec] = std::from_chars(args.data(), args.data() + args.size(), d);
    if (args.empty() || ec != std::errc() || ptr != args.data() + args.size()) {
      throw InvalidInput("norm spec: bad fixed distance '" + args + "'");
    }
    if (!(d > 0.0) || !std::isfinite(d)) throw InvalidInput("norm spec: fixed distance must be positive");
    return NormSpec::fixed(d);
  }
  throw InvalidInput("norm spec: unknown mode '" + mode + "'");
}

Point centroid(const LandmarkSet& s, const std::vector<int>& idx) {
  Point c;
  for (int i : idx) {
    c.x += s.points.at(i).x;
    c.y += s.points.at(i).y;
  }
  c.x /= static_cast<double>(idx.size());
  c.y /= static_cast<double>(idx.size());
  return c;
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

SubsetReport summarize(const std::vector<double>& nmes, const std::vector<double>& thresholds) {
  SubsetReport r;
  r.samples = nmes.size();
  double sum = 0.0;
  for (double e : nmes) sum += e;
  r.nme_mean = sum / static_cast<double>(nmes.size());
  for (double t : thresholds) {
    r.stats.push_back({t, failure_rate(nmes, t), auc_ced(nmes, t, 1).auc});
  }
  return r;
}

void write_subset(std::ostream& out, const std::string& prefix, const SubsetReport& r) {
  out << prefix << "samples\t" << r.samples << '\n';
  out << prefix << "nme\t" << fmt(r.nme_mean) << '\n';
  for (const auto& s : r.stats) {
    out << prefix << "fr@" << fmt(s.threshold) << '\t' << fmt(s.failure_rate) << '\n';
    out << prefix << "auc@" << fmt(s.threshold) << '\t' << fmt(s.auc) << '\n';
  }
}

}  // namespace

NormSpec NormSpec::inter_ocular(int left_corner, int right_corner) {
  NormSpec n;
  n.mode = Mode::inter_ocular;
  n.left = {left_corner};
  n.right = {right_corner};
  return n;
}

NormSpec NormSpec::inter_pupil(std::vector<int> left_eye, std::vector<int> right_eye) {
  NormSpec n;
  n.mode = Mode::inter_pupil;
  n.left = std::move(left_eye);
  n.right = std::move(right_eye);
  return n;
}

NormSpec NormSpec::fixed(double d) {
  NormSpec n;
  n.mode = Mode::fixed;
  n.distance = d;
  return n;
}

void NormSpec::validate(int num_points) const {
  if (mode == Mode::fixed) {
    if (!(distance > 0.0) || !std::isfinite(distance)) {
      throw InvalidInput("norm spec: fixed distance must be a positive number");
    }
    return;
  }
  if (left.empty() || right.empty()) throw InvalidInput("norm spec: empty landmark index list");
  if (mode == Mode::inter_ocular && (left.size() != 1 || right.size() != 1)) {
    throw InvalidInput("norm spec: inter-ocular takes exactly one index per side");
  }
  for (const auto* list : {&left, &right}) {
    for (int i : *list) {
      if (i < 0 || i >= num_points) {
        throw InvalidInput("norm spec: index " + std::to_string(i) + " outside [0, " +
                           std::to_string(num_points) + ")");
      }
    }
  }
}

double NormSpec::distance_for(const LandmarkSet& gt) const {
  if (mode == Mode::fixed) return distance;
  const Point a = centroid(gt, left);
  const Point b = centroid(gt, right);
  const double d = std::hypot(a.x - b.x, a.y - b.y);
  if (d == 0.0) {
    throw DegenerateSample("zero normalization distance for sample '" + gt.image_id + "'");
  }
  return d;
}

NormSpec parse_norm_spec(const std::string& text) {
  if (text.find(':') != std::string::npos) return parse_norm_text(text);
  std::ifstream in(text);
  if (!in) throw InvalidInput("norm spec: '" + text + "' is neither a spec nor a readable file");
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (!trim(line).empty()) return parse_norm_text(line);
  }
  throw InvalidInput("norm spec: file '" + text + "' has no spec line");
}

double nme(const LandmarkSet& pred, const LandmarkSet& gt, const NormSpec& norm) {
  if (pred.size() != gt.size() || gt.size() == 0) {
    throw InvalidInput("nme: prediction has " + std::to_string(pred.size()) +
                       " landmarks, ground truth " + std::to_string(gt.size()));
  }
  const double d = norm.distance_for(gt);
  double sum = 0.0;
  for (std::size_t l = 0; l < gt.size(); ++l) {
    sum += std::hypot(pred.points[l].x - gt.points[l].x, pred.points[l].y - gt.points[l].y);
  }
  return sum / static_cast<double>(gt.size()) / d;
}

double ced_at(const std::vector<double>& nmes, double e) {
  if (nmes.empty()) throw InvalidInput("ced: no samples");
  const auto hits = std::count_if(nmes.begin(), nmes.end(), [e](double v) { return v <= e; });
  return static_cast<double>(hits) / static_cast<double>(nmes.size());
}

double failure_rate(const std::vector<double>& nmes, double threshold) {
  return 1.0 - ced_at(nmes, threshold);
}

AucCed auc_ced(const std::vector<double>& nmes, double threshold, int resolution) {
  if (nmes.empty()) throw InvalidInput("auc_ced: no samples");
  if (!(threshold > 0.0)) throw InvalidInput("auc_ced: threshold must be positive");
  if (resolution < 1) throw InvalidInput("auc_ced: resolution must be >= 1");

  std::vector<double> sorted = nmes;
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());

  AucCed out;
  // Collapse equal errors into one step so the curve is a proper CDF.
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.steps.push_back({sorted[i], static_cast<double>(i + 1) / n});
  }

  // CED is constant between consecutive steps; add each rectangle that
  // lies inside [0, threshold].
  double area = 0.0;
  for (std::size_t j = 0; j < out.steps.size(); ++j) {
    const double start = std::max(out.steps[j].error, 0.0);
    if (start >= threshold) break;
    const double end = j + 1 < out.steps.size() ? std::min(out.steps[j + 1].error, threshold)
                                                : threshold;
    area += (end - start) * out.steps[j].fraction;
  }
  out.auc = area / threshold;

  out.sampled.reserve(static_cast<std::size_t>(resolution) + 1);
  for (int k = 0; k <= resolution; ++k) {
    const double e = threshold * k / resolution;
    out.sampled.push_back({e, ced_at(nmes, e)});
  }
  return out;
}

EvalReport evaluate(const std::vector<LandmarkSet>& preds, const std::vector<LandmarkSet>& gts,
                    const NormSpec& norm, const std::vector<double>& thresholds,
                    const BatchAttributes& subsets, int ced_resolution) {
  if (preds.size() != gts.size()) {
    throw InvalidInput("evaluate: " + std::to_string(preds.size()) + " predictions for " +
                       std::to_string(gts.size()) + " ground-truth records");
  }
  if (gts.empty()) throw InvalidInput("evaluate: no samples");
  if (thresholds.empty()) throw InvalidInput("evaluate: at least one threshold is required");
  if (static_cast<std::size_t>(subsets.size()) != gts.size()) {
    throw InvalidInput("evaluate: attribute rows do not match sample count");
  }
  norm.validate(static_cast<int>(gts.front().size()));

  EvalReport report;
  const auto count = static_cast<std::ptrdiff_t>(gts.size());
  report.per_sample_nme.assign(gts.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::uint8_t> degenerate(gts.size(), 0);
  std::vector<std::string> errors(gts.size());

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      report.per_sample_nme[i] = nme(preds[i], gts[i], norm);
    } catch (const DegenerateSample&) {
      degenerate[i] = 1;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (!errors[i].empty()) throw InvalidInput("sample " + std::to_string(i) + ": " + errors[i]);
    if (degenerate[i]) {
      std::cerr << "warning: sample " << i << " ('" << gts[i].image_id
                << "') has zero normalization distance, excluded\n";
      report.excluded.push_back(i);
    }
  }

  std::vector<double> kept;
  std::array<std::vector<double>, kNumAttributes> per_class;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (degenerate[i]) continue;
    kept.push_back(report.per_sample_nme[i]);
    for (int c = 0; c < kNumAttributes; ++c) {
      if (subsets.has(static_cast<int>(i), c)) per_class[c].push_back(report.per_sample_nme[i]);
    }
  }
  if (kept.empty()) throw InvalidInput("evaluate: every sample was excluded");

  report.overall = summarize(kept, thresholds);
  for (int c = 0; c < kNumAttributes; ++c) {
    if (!per_class[c].empty()) report.subsets[c] = summarize(per_class[c], thresholds);
  }
  report.ced = auc_ced(kept, thresholds.front(), ced_resolution).sampled;
  return report;
}

void write_report(std::ostream& out, const EvalReport& report) {
  out << "excluded\t" << report.excluded.size() << '\n';
  write_subset(out, "", report.overall);
  for (int c = 0; c < kNumAttributes; ++c) {
    const std::string prefix = std::string(attribute_name(c)) + ".";
    if (report.subsets[c]) {
      write_subset(out, prefix, *report.subsets[c]);
    } else {
      out << prefix << "samples\t0\n";
    }
  }
}

void write_ced(std::ostream& out, const std::vector<CedPoint>& points) {
  for (const auto& p : points) out << fmt(p.error) << '\t' << fmt(p.fraction) << '\n';
}

}  // namespace propnet
