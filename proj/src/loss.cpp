#include "propnet/loss.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "propnet/error.hpp"

namespace propnet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void check_batch(std::span<const HeatmapStack> gt, std::span<const HeatmapStack> pred,
                 const BatchAttributes& batch) {
  if (gt.size() != pred.size()) throw InvalidInput("loss: gt/pred batch sizes differ");
  if (static_cast<int>(gt.size()) != batch.size()) {
    throw InvalidInput("loss: attribute rows do not match batch size");
  }
  if (gt.empty()) throw InvalidInput("loss: empty batch");
  for (std::size_t n = 0; n < gt.size(); ++n) {
    if (!gt[n].same_shape(pred[n])) {
      throw InvalidInput("loss: shape mismatch in sample " + std::to_string(n));
    }
  }
}

// Caches the knot constants of the last GT value seen; GT heatmaps are mostly
// zeros so the pow() calls are skipped for most pixels.
class KnotCache {
 public:
  explicit KnotCache(const LossParams& p) : p_(p) {}

  const AwingKnot& operator()(double y) {
    if (y != y_ || !valid_) {
      y_ = y;
      knot_ = awing_knot(y, p_);
      valid_ = true;
    }
    return knot_;
  }

 private:
  const LossParams& p_;
  double y_ = 0.0;
  AwingKnot knot_{};
  bool valid_ = false;
};

// Remembers the last (y, y_hat) pair and its result. Background pixels of a
// map are mostly y == 0 with identical predictions, so consecutive pixels
// often repeat the same pair.
class PixelMemo {
 public:
  template <typename Fn>
  double operator()(double y, double y_hat, Fn&& compute) {
    if (y != y_ || y_hat != y_hat_) {
      y_ = y;
      y_hat_ = y_hat;
      value_ = compute();
    }
    return value_;
  }

 private:
  double y_ = std::numeric_limits<double>::quiet_NaN();
  double y_hat_ = std::numeric_limits<double>::quiet_NaN();
  double value_ = 0.0;
};

double awing_with_knot(double y, double y_hat, const LossParams& p, const AwingKnot& k) {
  const double d = std::abs(y - y_hat);
  if (d < p.theta) return p.omega * std::log1p(std::pow(d / p.epsilon, p.alpha - y));
  return k.slope * d - k.offset;
}

double awing_grad_with_knot(double y, double y_hat, const LossParams& p, const AwingKnot& k) {
  const double diff = y_hat - y;
  if (diff == 0.0) return 0.0;
  const double d = std::abs(diff);
  const double sign = diff > 0.0 ? 1.0 : -1.0;
  if (d >= p.theta) return sign * k.slope;
  const double e = p.alpha - y;
  const double r = d / p.epsilon;
  return sign * p.omega * e * std::pow(r, e - 1.0) / (p.epsilon * (1.0 + std::pow(r, e)));
}

double weighted_map_loss(std::span<const HeatmapStack> gt, std::span<const HeatmapStack> pred,
                         const BatchAttributes& batch, const LossParams& p) {
  check_batch(gt, pred, batch);
  p.validate();
  const int n_samples = static_cast<int>(gt.size());
  std::vector<double> per_sample(gt.size(), 0.0);

#pragma omp parallel for schedule(static)
  for (int n = 0; n < n_samples; ++n) {
    KnotCache knots(p);
    PixelMemo memo;
    const HeatmapStack& g = gt[n];
    const HeatmapStack& q = pred[n];
    const double pixels = static_cast<double>(g.plane_size());
    double maps_sum = 0.0;
    for (int k = 0; k < g.channels(); ++k) {
      const auto gy = g.channel(k);
      const auto qy = q.channel(k);
      double acc = 0.0;
      for (std::size_t i = 0; i < gy.size(); ++i) {
        acc += memo(gy[i], qy[i], [&] { return awing_with_knot(gy[i], qy[i], p, knots(gy[i])); });
      }
      maps_sum += acc / pixels;
    }
    per_sample[n] = sample_weight(batch, n) * maps_sum;
  }
  double total = 0.0;
  for (double v : per_sample) total += v;
  return total / n_samples;
}

std::vector<HeatmapStack> weighted_map_grad(std::span<const HeatmapStack> gt,
                                            std::span<const HeatmapStack> pred,
                                            const BatchAttributes& batch, const LossParams& p,
                                            double scale) {
  check_batch(gt, pred, batch);
  p.validate();
  const int n_samples = static_cast<int>(gt.size());
  std::vector<HeatmapStack> out(gt.size());

#pragma omp parallel for schedule(static)
  for (int n = 0; n < n_samples; ++n) {
    KnotCache knots(p);
    PixelMemo memo;
    const HeatmapStack& g = gt[n];
    const HeatmapStack& q = pred[n];
    HeatmapStack grad(g.channels(), g.height(), g.width());
    const double factor =
        scale * sample_weight(batch, n) / (n_samples * static_cast<double>(g.plane_size()));
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = g.data()[i];
      const double y_hat = q.data()[i];
      grad.data()[i] =
          factor * memo(y, y_hat, [&] { return awing_grad_with_knot(y, y_hat, p, knots(y)); });
    }
    out[n] = std::move(grad);
  }
  return out;
}

}  // namespace

void LossParams::validate() const {
  if (!(omega > 0.0 && epsilon > 0.0 && theta > 0.0)) {
    throw InvalidInput("LossParams: omega, epsilon and theta must be positive");
  }
  if (!(alpha > 1.0)) throw InvalidInput("LossParams: alpha must exceed 1");
  if (!std::isfinite(beta)) throw InvalidInput("LossParams: beta must be finite");
}

LossParams read_loss_params(std::istream& in) {
  LossParams p;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("loss params line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string text = trim(line.substr(eq + 1));
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      throw InvalidInput("loss params line " + std::to_string(line_no) + ": bad number '" + text +
                         "'");
    }
    if (key == "omega") p.omega = value;
    else if (key == "epsilon") p.epsilon = value;
    else if (key == "alpha") p.alpha = value;
    else if (key == "theta") p.theta = value;
    else if (key == "beta") p.beta = value;
    else throw InvalidInput("loss params line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  p.validate();
  return p;
}

LossParams load_loss_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open loss params '" + path + "'");
  return read_loss_params(in);
}

AwingKnot awing_knot(double y, const LossParams& p) {
  const double e = p.alpha - y;
  const double r = p.theta / p.epsilon;
  const double re = std::pow(r, e);
  const double slope = p.omega * e * std::pow(r, e - 1.0) / (1.0 + re) / p.epsilon;
  return {slope, p.theta * slope - p.omega * std::log1p(re)};
}

double awing(double y, double y_hat, const LossParams& p) {
  return awing_with_knot(y, y_hat, p, awing_knot(y, p));
}

double awing_grad(double y, double y_hat, const LossParams& p) {
  return awing_grad_with_knot(y, y_hat, p, awing_knot(y, p));
}

// ---------------------------------------------------------------------------
// Focal factor

Fraction Fraction::reduced() const {
  const std::int64_t g = std::gcd(num, den);
  return g == 0 ? *this : Fraction{num / g, den / g};
}

Fraction operator+(const Fraction& a, const Fraction& b) {
  return Fraction{a.num * b.den + b.num * a.den, a.den * b.den}.reduced();
}

Fraction operator*(const Fraction& a, const Fraction& b) {
  return Fraction{a.num * b.num, a.den * b.den}.reduced();
}

bool operator==(const Fraction& a, const Fraction& b) { return a.num * b.den == b.num * a.den; }

BatchAttributes::BatchAttributes(std::vector<AttributeFlags> rows) : rows_(std::move(rows)) {
  for (const auto& row : rows_) {
    for (auto v : row) {
      if (v > 1) throw InvalidInput("BatchAttributes: entries must be 0 or 1");
    }
  }
}

BatchAttributes BatchAttributes::from_samples(const std::vector<LandmarkSet>& samples) {
  std::vector<AttributeFlags> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(s.attributes);
  return BatchAttributes(std::move(rows));
}

BatchAttributes BatchAttributes::none(int n) {
  return BatchAttributes(std::vector<AttributeFlags>(static_cast<std::size_t>(n)));
}

int BatchAttributes::members(int c) const {
  int count = 0;
  for (const auto& row : rows_) count += row.at(c) ? 1 : 0;
  return count;
}

Fraction focal_factor(const BatchAttributes& batch, int c) {
  if (c < 0 || c >= kNumAttributes) throw InvalidInput("focal_factor: class index out of range");
  const int m = batch.members(c);
  if (m == 0) return {1, 1};
  return Fraction{batch.size(), m}.reduced();
}

Fraction class_weight_total(const BatchAttributes& batch, int c) {
  const Fraction factor = focal_factor(batch, c);
  Fraction total{0, 1};
  for (int n = 0; n < batch.size(); ++n) {
    total = total + Fraction{batch.has(n, c) ? 1 : 0, 1} * factor;
  }
  return total;
}

double sample_weight(const BatchAttributes& batch, int n) {
  if (n < 0 || n >= batch.size()) throw InvalidInput("sample_weight: sample index out of range");
  Fraction w{0, 1};
  bool any = false;
  for (int c = 0; c < kNumAttributes; ++c) {
    if (batch.has(n, c)) {
      w = w + focal_factor(batch, c);
      any = true;
    }
  }
  return any ? w.value() : 1.0;
}

// ---------------------------------------------------------------------------
// Composite losses

double landmark_loss(std::span<const HeatmapStack> gt, std::span<const HeatmapStack> pred,
                     const BatchAttributes& batch, const LossParams& p) {
  return weighted_map_loss(gt, pred, batch, p);
}

double boundary_loss(std::span<const HeatmapStack> gt, std::span<const HeatmapStack> pred,
                     const BatchAttributes& batch, const LossParams& p) {
  return weighted_map_loss(gt, pred, batch, p);
}

std::vector<HeatmapStack> landmark_loss_grad(std::span<const HeatmapStack> gt,
                                             std::span<const HeatmapStack> pred,
                                             const BatchAttributes& batch, const LossParams& p) {
  return weighted_map_grad(gt, pred, batch, p, 1.0);
}

std::vector<HeatmapStack> boundary_loss_grad(std::span<const HeatmapStack> gt,
                                             std::span<const HeatmapStack> pred,
                                             const BatchAttributes& batch, const LossParams& p) {
  return weighted_map_grad(gt, pred, batch, p, 1.0);
}

double total_loss(double landmark, double boundary, const LossParams& p) {
  return landmark + p.beta * boundary;
}

LossTerms total_loss(const HeatmapBatch& gt, const HeatmapBatch& pred,
                     const BatchAttributes& batch, const LossParams& p) {
  LossTerms t;
  t.landmark = landmark_loss(gt.landmarks, pred.landmarks, batch, p);
  t.boundary = boundary_loss(gt.boundaries, pred.boundaries, batch, p);
  t.total = total_loss(t.landmark, t.boundary, p);
  return t;
}

HeatmapBatch total_loss_grad(const HeatmapBatch& gt, const HeatmapBatch& pred,
                             const BatchAttributes& batch, const LossParams& p) {
  HeatmapBatch g;
  g.landmarks = weighted_map_grad(gt.landmarks, pred.landmarks, batch, p, 1.0);
  g.boundaries = weighted_map_grad(gt.boundaries, pred.boundaries, batch, p, p.beta);
  return g;
}

}  // namespace propnet
