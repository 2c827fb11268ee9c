#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "propnet/geometry.hpp"
#include "propnet/loss.hpp"

namespace propnet {

// How the per-sample normalization distance d is taken from ground truth.
struct NormSpec {
  enum class Mode { inter_ocular, inter_pupil, fixed };

  Mode mode = Mode::inter_ocular;
  // inter_ocular: one index in each; inter_pupil: the landmarks averaged
  // into each pupil centre.
  std::vector<int> left;
  std::vector<int> right;
  double distance = 0.0;  // fixed mode

  static NormSpec inter_ocular(int left_corner, int right_corner);
  static NormSpec inter_pupil(std::vector<int> left_eye, std::vector<int> right_eye);
  static NormSpec fixed(double d);

  void validate(int num_points) const;
  // Throws DegenerateSample when d == 0.
  double distance_for(const LandmarkSet& gt) const;
};

// Accepted forms:
//   inter-ocular:60,72
//   inter-pupil:96|97        (or comma lists on each side of '|')
//   fixed:64
// or the path of a file whose first non-comment line is one of those.
NormSpec parse_norm_spec(const std::string& text);

// (1/L) sum_l |p_l - g_l| / d.
double nme(const LandmarkSet& pred, const LandmarkSet& gt, const NormSpec& norm);

// Fraction of samples with NME <= e (non-strict: a sample exactly at e counts).
double ced_at(const std::vector<double>& nmes, double e);

// Fraction with NME strictly above the threshold, computed as
// 1 - ced_at(nmes, threshold) so the complement identity is exact.
double failure_rate(const std::vector<double>& nmes, double threshold);

struct CedPoint {
  double error;
  double fraction;
};

struct AucCed {
  double auc = 0.0;
  std::vector<CedPoint> steps;    // exact step function: sorted NMEs, i/N
  std::vector<CedPoint> sampled;  // resolution+1 evenly spaced points on [0, t]
};

// AUC = (1/t) * integral_0^t CED(e) de, integrated exactly over the step
// function. `resolution` only controls the sampled curve.
AucCed auc_ced(const std::vector<double>& nmes, double threshold, int resolution = 100);

struct ThresholdStats {
  double threshold = 0.0;
  double failure_rate = 0.0;
  double auc = 0.0;
};

struct SubsetReport {
  std::size_t samples = 0;
  double nme_mean = 0.0;
  std::vector<ThresholdStats> stats;
};

struct EvalReport {
  std::vector<double> per_sample_nme;  // NaN for excluded (degenerate) samples
  std::vector<std::size_t> excluded;   // indices skipped for zero d
  SubsetReport overall;
  // One entry per attribute class; nullopt when no sample has the flag.
  std::array<std::optional<SubsetReport>, kNumAttributes> subsets;
  std::vector<CedPoint> ced;  // sampled CED up to the first threshold
};

EvalReport evaluate(const std::vector<LandmarkSet>& preds, const std::vector<LandmarkSet>& gts,
                    const NormSpec& norm, const std::vector<double>& thresholds,
                    const BatchAttributes& subsets, int ced_resolution = 100);

// `name<TAB>value` per line; subset metrics prefixed with the attribute name.
void write_report(std::ostream& out, const EvalReport& report);
// Two columns: error, cumulative fraction.
void write_ced(std::ostream& out, const std::vector<CedPoint>& points);

}  // namespace propnet
