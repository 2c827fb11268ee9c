#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace propnet {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool degenerate() const { return !(x_min < x_max && y_min < y_max); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline constexpr int kNumAttributes = 6;

// Attribute order used by the annotation format.
enum class Attribute : int { pose = 0, expression, illumination, makeup, occlusion, blur };

std::string_view attribute_name(int index);

using AttributeFlags = std::array<std::uint8_t, kNumAttributes>;

// One annotated face. `valid` is the per-landmark validity mask; geometry
// operations never clamp points, they only mark them.
struct LandmarkSet {
  std::vector<Point> points;
  std::vector<std::uint8_t> valid;
  std::string image_id;
  BBox bbox;
  AttributeFlags attributes{};

  LandmarkSet() = default;
  LandmarkSet(std::vector<Point> pts, std::string id, BBox box, AttributeFlags attrs);

  std::size_t size() const { return points.size(); }
  bool is_valid(std::size_t k) const { return valid.empty() || valid[k] != 0; }

  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;
};

// Landmark permutation applied under a horizontal mirror.
class FlipPairTable {
 public:
  FlipPairTable() = default;
  // Throws InvalidInput unless every index in [0, num_points) is covered
  // exactly once by pairs (i != j) or self-pairs (i == j).
  FlipPairTable(int num_points, const std::vector<std::pair<int, int>>& pairs);

  int num_points() const { return static_cast<int>(mirror_.size()); }
  int mirror(int index) const { return mirror_.at(index); }
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  std::vector<int> self_paired() const;

 private:
  std::vector<int> mirror_;
  std::vector<std::pair<int, int>> pairs_;
};

// Text format: one `i j` pair per line, zero-based. Indices absent from the
// file map to themselves. `#` starts a comment.
FlipPairTable read_flip_pairs(std::istream& in, int num_points);
FlipPairTable load_flip_pairs(const std::string& path, int num_points);

// 2x3 affine transform: [x'] = [a b c] [x y 1]^T, [y'] = [d e f] [x y 1]^T.
struct Affine2D {
  double a = 1.0, b = 0.0, c = 0.0;
  double d = 0.0, e = 1.0, f = 0.0;

  Point apply(Point p) const { return {a * p.x + b * p.y + c, d * p.x + e * p.y + f}; }
  Affine2D inverse() const;
  // (this * other)(p) == this->apply(other.apply(p))
  Affine2D compose(const Affine2D& other) const;

  static Affine2D identity() { return {}; }
  static Affine2D translation(double tx, double ty) { return {1, 0, tx, 0, 1, ty}; }
  static Affine2D scaling(double sx, double sy) { return {sx, 0, 0, 0, sy, 0}; }
  // Rotation by `degrees` about `center`, x right / y down image axes.
  static Affine2D rotation(double degrees, Point center);

  friend bool operator==(const Affine2D&, const Affine2D&) = default;
};

LandmarkSet transform(const LandmarkSet& sample, const Affine2D& t);

// Generic annotation record: 2K coordinates, 4 bbox values, 6 attribute
// bits, image path, whitespace separated.
LandmarkSet parse_wflw_line(std::string_view line, int num_points = 98);

// Prediction record: 2K coordinates, optionally followed by the rest of an
// annotation record (bbox, attributes, path), which is ignored.
LandmarkSet parse_prediction_line(std::string_view line, int num_points = 98);

// Reads every non-blank line. Errors carry the 1-based line number.
std::vector<LandmarkSet> read_annotations(std::istream& in, int num_points = 98);
std::vector<LandmarkSet> load_annotations(const std::string& path, int num_points = 98);
std::vector<LandmarkSet> load_predictions(const std::string& path, int num_points = 98);

std::string format_record(const LandmarkSet& sample);

struct CropResult {
  Affine2D transform;
  LandmarkSet sample;
};

// Maps the bbox, grown by `margin` (fraction of its size on every side),
// onto [0, out_size)^2. The sample's bbox becomes the output frame and
// points falling outside it are marked invalid.
CropResult crop_resize(const LandmarkSet& sample, int out_size, double margin = 0.0);

struct AugmentParams {
  double rotation_deg = 30.0;
  double scale_frac = 0.15;
  int crop_px = 25;
  double flip_prob = 0.5;
  std::uint64_t rng_seed = 0;
  int frame_size = 256;

  static AugmentParams none(std::uint64_t seed = 0) { return {0.0, 0.0, 0, 0.0, seed, 256}; }
};

// Horizontal mirror in a frame of the given width: x -> (width - 1) - x,
// with landmarks reindexed through the flip table.
LandmarkSet mirror(const LandmarkSet& sample, const FlipPairTable& table, int frame_width);

// Rotation and scaling about the frame centre, integer translation, then an
// optional mirror. Deterministic in params.rng_seed. Landmarks leaving the
// frame are kept and flagged invalid.
LandmarkSet augment(const LandmarkSet& sample, const AugmentParams& params,
                    const FlipPairTable& flip_table);

// Per-attribute fraction of samples carrying the flag.
std::array<double, kNumAttributes> attribute_fractions(const std::vector<LandmarkSet>& samples);

}  // namespace propnet
