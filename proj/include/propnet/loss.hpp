#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "propnet/geometry.hpp"
#include "propnet/tensor.hpp"

namespace propnet {

struct LossParams {
  double omega = 14.0;
  double epsilon = 1.0;
  double alpha = 2.1;
  double theta = 0.5;
  double beta = 0.5;

  // omega, epsilon, theta > 0 and alpha > 1.
  void validate() const;
};

// key=value lines (omega, epsilon, alpha, theta, beta); unspecified keys keep
// their defaults, `#` starts a comment, unknown keys are rejected.
LossParams read_loss_params(std::istream& in);
LossParams load_loss_params(const std::string& path);

// Linear-branch constants that make the loss C1 at |y - y_hat| = theta.
struct AwingKnot {
  double slope;   // A
  double offset;  // Omega
};
AwingKnot awing_knot(double y, const LossParams& p);

// Adaptive Wing loss of a single pixel: log branch below theta, linear above.
double awing(double y, double y_hat, const LossParams& p);
// d awing / d y_hat.
double awing_grad(double y, double y_hat, const LossParams& p);

// Exact non-negative rational; focal factors are kept exact so per-class
// weight totals can be checked without rounding.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  Fraction reduced() const;
  friend Fraction operator+(const Fraction& a, const Fraction& b);
  friend Fraction operator*(const Fraction& a, const Fraction& b);
  friend bool operator==(const Fraction& a, const Fraction& b);
};

// N x C binary membership matrix s_n^(c) of one batch.
class BatchAttributes {
 public:
  BatchAttributes() = default;
  explicit BatchAttributes(std::vector<AttributeFlags> rows);
  static BatchAttributes from_samples(const std::vector<LandmarkSet>& samples);
  // N samples without any attribute.
  static BatchAttributes none(int n);

  int size() const { return static_cast<int>(rows_.size()); }
  bool has(int n, int c) const { return rows_.at(n)[c] != 0; }
  int members(int c) const;
  const std::vector<AttributeFlags>& rows() const { return rows_; }

 private:
  std::vector<AttributeFlags> rows_;
};

// N / sum_n s_n^(c), or 1 when no sample carries class c.
Fraction focal_factor(const BatchAttributes& batch, int c);

// sum_n s_n^(c) * focal_factor(c), exact.
Fraction class_weight_total(const BatchAttributes& batch, int c);

// sum_c s_n^(c) * focal_factor(c); 1 for a sample with no attributes.
double sample_weight(const BatchAttributes& batch, int n);

// (1/N) sum_n w_n sum_k mean_pixels awing(gt, pred). Summation order is
// fixed (sample, map, row-major pixel) so the result is reproducible.
double landmark_loss(std::span<const HeatmapStack> gt, std::span<const HeatmapStack> pred,
                     const BatchAttributes& batch, const LossParams& p);
double boundary_loss(std::span<const HeatmapStack> gt, std::span<const HeatmapStack> pred,
                     const BatchAttributes& batch, const LossParams& p);

// Gradient of landmark_loss / boundary_loss with respect to pred.
std::vector<HeatmapStack> landmark_loss_grad(std::span<const HeatmapStack> gt,
                                             std::span<const HeatmapStack> pred,
                                             const BatchAttributes& batch, const LossParams& p);
std::vector<HeatmapStack> boundary_loss_grad(std::span<const HeatmapStack> gt,
                                             std::span<const HeatmapStack> pred,
                                             const BatchAttributes& batch, const LossParams& p);

// L_lm + beta * L_bd.
double total_loss(double landmark, double boundary, const LossParams& p);

struct LossTerms {
  double landmark = 0.0;
  double boundary = 0.0;
  double total = 0.0;
};

struct HeatmapBatch {
  std::vector<HeatmapStack> landmarks;
  std::vector<HeatmapStack> boundaries;
};

LossTerms total_loss(const HeatmapBatch& gt, const HeatmapBatch& pred,
                     const BatchAttributes& batch, const LossParams& p);

// Gradient of the total loss with respect to both prediction stacks.
HeatmapBatch total_loss_grad(const HeatmapBatch& gt, const HeatmapBatch& pred,
                             const BatchAttributes& batch, const LossParams& p);

}  // namespace propnet
