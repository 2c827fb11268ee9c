#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "propnet/geometry.hpp"
#include "propnet/tensor.hpp"

namespace propnet {

struct GaussianParams {
  double sigma = 1.5;             // heatmap pixels
  double truncation_sigmas = 3.0;  // support radius in units of sigma

  double radius() const { return sigma * truncation_sigmas; }
  void validate() const;
};

// Relationship between the network input frame and the heatmap grid.
// Pixel centres are aligned: input pixel i covers [i, i+1), heatmap cell j
// covers input range [j*stride, (j+1)*stride), so
//   u = (x + 0.5) / stride - 0.5.
// Under this convention a horizontal mirror of the input frame
// (x -> W_in - 1 - x) is exactly a column mirror of the heatmap grid.
struct HeatmapGeometry {
  int input_size = 256;
  int height = 64;
  int width = 64;

  double stride_x() const { return static_cast<double>(input_size) / width; }
  double stride_y() const { return static_cast<double>(input_size) / height; }
  Point to_heatmap(Point p) const;
  Point to_input(Point p) const;
  void validate() const;
};

struct BoundarySpec {
  std::vector<int> indices;
  bool closed = false;
};

class BoundaryScheme {
 public:
  BoundaryScheme() = default;
  explicit BoundaryScheme(std::vector<BoundarySpec> boundaries);

  int size() const { return static_cast<int>(boundaries_.size()); }
  const BoundarySpec& operator[](int m) const { return boundaries_.at(m); }
  const std::vector<BoundarySpec>& boundaries() const { return boundaries_; }

  // Throws InvalidInput if any index is >= num_points or the count differs
  // from expected_count (when expected_count > 0).
  void validate(int num_points, int expected_count = 0) const;

  // Boundary index owning each landmark, -1 for landmarks on no boundary.
  // A landmark shared by two boundaries reports the first.
  std::vector<int> owners(int num_points) const;

 private:
  std::vector<BoundarySpec> boundaries_;
};

// Text format: one boundary per line, `closed|open i1 i2 ... ik`.
BoundaryScheme read_boundary_scheme(std::istream& in);
BoundaryScheme load_boundary_scheme(const std::string& path);

// Truncated Gaussian around (u, v) in heatmap coordinates, peak-normalized
// so the largest pixel equals 1. Written into `plane` (height x width).
void render_point(std::span<double> plane, int height, int width, Point center,
                  const GaussianParams& g);

// A landmark is encodable when its mask bit is set, it is finite, and it
// lies on the heatmap grid (inside [-0.5, W-0.5) x [-0.5, H-0.5)).
bool on_grid(Point heatmap_point, int height, int width);

// One map per landmark; invalid or off-grid landmarks give all-zero maps.
HeatmapStack encode_landmarks(const LandmarkSet& sample, const HeatmapGeometry& geom,
                              const GaussianParams& g);

// Same, for points already in heatmap coordinates (all treated valid).
HeatmapStack encode_heatmap_points(const std::vector<Point>& points, int height, int width,
                                   const GaussianParams& g);

// Argmax (lowest row, then column, on ties) moved a quarter pixel toward
// its strongest 4-neighbour (neighbour ties broken in (row, col) order).
// Result is in heatmap coordinates, x = column, y = row.
Point decode_heatmap(const PlaneView& heatmap);

// Decodes every map and returns landmarks in input-frame coordinates.
std::vector<Point> decode_landmarks(const HeatmapStack& stack, const HeatmapGeometry& geom);

// One map per boundary: each pixel is the truncated Gaussian of its
// distance to the boundary polyline, peak-normalized to 1. Boundaries with
// any invalid landmark are all zero.
HeatmapStack rasterize_boundaries(const LandmarkSet& sample, const BoundaryScheme& scheme,
                                  const HeatmapGeometry& geom, const GaussianParams& g);

// Polyline version in heatmap coordinates.
void render_polyline(std::span<double> plane, int height, int width,
                     const std::vector<Point>& vertices, bool closed, const GaussianParams& g);

}  // namespace propnet
