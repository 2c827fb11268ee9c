#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "propnet/heatmap_codec.hpp"
#include "propnet/loss.hpp"
#include "propnet/metrics.hpp"

namespace propnet::cli {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitVerificationFailed = 2;

struct RunConfig {
  std::string subcommand;
  std::string input;        // annotations (gen-gt, stats, fit-toy) or predictions (eval)
  std::string ground_truth; // eval only
  std::string out;          // output directory or file
  std::string scheme;       // boundary scheme file
  std::string loss_params;  // key=value file; defaults when empty
  std::string norm = "inter-ocular:60,72";
  std::vector<double> thresholds;
  std::uint64_t seed = 0;
  int num_points = 98;
};

// ---------------------------------------------------------------------------
// gen-gt

struct GenGtOptions {
  std::string annotations;
  std::string scheme;
  std::string out_dir;
  int num_points = 98;
  double margin = 0.1;  // crop margin, fraction of the bbox size per side
  GaussianParams gaussian;
  HeatmapGeometry geometry;
};

// Writes <index>.landmarks.hmk and <index>.boundaries.hmk per record plus
// manifest.tsv. Malformed records are logged and skipped; the exit code is
// nonzero if any record failed.
int cmd_gen_gt(const GenGtOptions& opt, std::ostream& out, std::ostream& log);

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string predictions;
  std::string ground_truth;
  std::string norm = "inter-ocular:60,72";
  std::vector<double> thresholds{0.10};
  std::string ced_out;  // optional CED points file
  int num_points = 98;
  int ced_resolution = 100;
};

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& log);

// ---------------------------------------------------------------------------
// check-grad

struct GradCheckOptions {
  LossParams params;
  int trials = 100;
  std::uint64_t seed = 0;
  double step = 1e-5;
  double tolerance = 1e-4;
  bool inject_sign_bug = false;  // self-test: flips the analytic gradient
};

struct GradCheckResult {
  double landmark_max_rel = 0.0;
  double boundary_max_rel = 0.0;
  double total_max_rel = 0.0;
  int trials = 0;

  double worst() const;
};

// Central differences of landmark_loss, boundary_loss and the total loss on
// `trials` random pixels each, against the analytic gradients.
GradCheckResult check_gradients(const GradCheckOptions& opt);

int cmd_check_grad(const GradCheckOptions& opt, std::ostream& out, std::ostream& log);

// ---------------------------------------------------------------------------
// check-shift

struct ShiftCheckOptions {
  std::vector<int> kernel_sizes{2, 3, 5};
  int trials = 100;
  std::uint64_t seed = 0;
  int size = 64;
  int channels = 1;
  int max_shift = 2;
  double input_sigma = 2.0;  // smoothing of the random inputs
};

struct ShiftCheckResult {
  std::vector<double> plain;                 // subsample score per trial
  std::vector<std::vector<double>> blurred;  // [kernel][trial]
  std::vector<int> wins;                     // trials where blur > plain, per kernel
  double checkerboard_plain = 0.0;
  std::vector<double> checkerboard_blurred;
  double constant_plain = 0.0;
  std::vector<double> constant_blurred;
};

ShiftCheckResult check_shift(const ShiftCheckOptions& opt);

// Prints the score table; exit 2 unless every blur kernel scores at least
// plain subsampling on average and on the checkerboard.
int cmd_check_shift(const ShiftCheckOptions& opt, std::ostream& out, std::ostream& log);

// ---------------------------------------------------------------------------
// fit-toy

struct FitToyOptions {
  std::string annotations;  // empty: synthetic faces from `seed`
  std::string scheme;
  int samples = 5;
  int steps = 2000;
  double lr = 1e-2;
  double init = 0.5;  // initial value of every free heatmap pixel
  std::uint64_t seed = 0;
  int num_points = 98;
  LossParams params;
  bool adam = true;
  bool init_at_gt = false;
};

struct FitToyResult {
  std::vector<double> loss;  // total loss before each step, then the final value
  double final_nme = 0.0;    // decoded landmarks, heatmap frame, d = heatmap width
  int steps = 0;
};

FitToyResult fit_toy(const FitToyOptions& opt, const BoundaryScheme& scheme);

// Logs `step<TAB>loss` per step to `out`, then the final decoded NME.
int cmd_fit_toy(const FitToyOptions& opt, std::ostream& out, std::ostream& log);

// ---------------------------------------------------------------------------
// stats

int cmd_stats(const std::string& annotations, int num_points, std::ostream& out,
              std::ostream& log);

// Full command line: parses argv with CLI11 and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log);

}  // namespace propnet::cli
