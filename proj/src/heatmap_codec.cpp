#include "propnet/heatmap_codec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "propnet/error.hpp"

namespace propnet {

namespace {

struct Segment {
  Point a;
  Point b;
};

// Endpoints are put in lexicographic order so a segment's distance field
// does not depend on the direction it was listed in.
Segment canonical(Point p, Point q) {
  if (q.x < p.x || (q.x == p.x && q.y < p.y)) std::swap(p, q);
  return {p, q};
}

double squared_distance(const Segment& s, double x, double y) {
  const double ex = s.b.x - s.a.x;
  const double ey = s.b.y - s.a.y;
  const double len2 = ex * ex + ey * ey;
  double px = s.a.x;
  double py = s.a.y;
  if (len2 > 0.0) {
    const double t = std::clamp(((x - s.a.x) * ex + (y - s.a.y) * ey) / len2, 0.0, 1.0);
    px = s.a.x + t * ex;
    py = s.a.y + t * ey;
  }
  const double dx = x - px;
  const double dy = y - py;
  return dx * dx + dy * dy;
}

void render_segments(std::span<double> plane, int height, int width,
                     const std::vector<Segment>& segments, const GaussianParams& g) {
  std::fill(plane.begin(), plane.end(), 0.0);
  if (segments.empty()) return;
  const double r = g.radius();
  const double r2 = r * r;
  const double inv_two_var = 1.0 / (2.0 * g.sigma * g.sigma);

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const Segment& s : segments) {
    x_lo = std::min({x_lo, s.a.x, s.b.x});
    x_hi = std::max({x_hi, s.a.x, s.b.x});
    y_lo = std::min({y_lo, s.a.y, s.b.y});
    y_hi = std::max({y_hi, s.a.y, s.b.y});
  }
  const int c0 = std::max(0, static_cast<int>(std::floor(x_lo - r)));
  const int c1 = std::min(width - 1, static_cast<int>(std::ceil(x_hi + r)));
  const int r0 = std::max(0, static_cast<int>(std::floor(y_lo - r)));
  const int r1 = std::min(height - 1, static_cast<int>(std::ceil(y_hi + r)));

  double peak = 0.0;
  for (int row = r0; row <= r1; ++row) {
    for (int col = c0; col <= c1; ++col) {
      double d2 = std::numeric_limits<double>::infinity();
      for (const Segment& s : segments) d2 = std::min(d2, squared_distance(s, col, row));
      if (d2 <= r2) {
        const double v = std::exp(-d2 * inv_two_var);
        plane[static_cast<std::size_t>(row) * width + col] = v;
        peak = std::max(peak, v);
      }
    }
  }
  if (peak > 0.0 && peak != 1.0) {
    for (double& v : plane) v /= peak;
  }
}

bool finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

}  // namespace

void GaussianParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidInput("GaussianParams: sigma must be > 0");
  if (!(truncation_sigmas > 0.0)) throw InvalidInput("GaussianParams: truncation must be > 0");
}

Point HeatmapGeometry::to_heatmap(Point p) const {
  return {(p.x + 0.5) / stride_x() - 0.5, (p.y + 0.5) / stride_y() - 0.5};
}

Point HeatmapGeometry::to_input(Point p) const {
  return {(p.x + 0.5) * stride_x() - 0.5, (p.y + 0.5) * stride_y() - 0.5};
}

void HeatmapGeometry::validate() const {
  if (input_size <= 0 || height <= 0 || width <= 0) {
    throw InvalidInput("HeatmapGeometry: non-positive resolution");
  }
}

// ---------------------------------------------------------------------------
// Boundary scheme

BoundaryScheme::BoundaryScheme(std::vector<BoundarySpec> boundaries)
    : boundaries_(std::move(boundaries)) {
  for (std::size_t m = 0; m < boundaries_.size(); ++m) {
    if (boundaries_[m].indices.size() < 2) {
      throw InvalidInput("boundary " + std::to_string(m) + " needs at least 2 landmarks");
    }
    for (int i : boundaries_[m].indices) {
      if (i < 0) throw InvalidInput("boundary " + std::to_string(m) + ": negative index");
    }
  }
}

void BoundaryScheme::validate(int num_points, int expected_count) const {
  if (expected_count > 0 && size() != expected_count) {
    throw InvalidInput("boundary scheme has " + std::to_string(size()) + " boundaries, expected " +
                       std::to_string(expected_count));
  }
  for (int m = 0; m < size(); ++m) {
    for (int i : boundaries_[m].indices) {
      if (i >= num_points) {
        throw InvalidInput("boundary " + std::to_string(m) + ": index " + std::to_string(i) +
                           " >= landmark count " + std::to_string(num_points));
      }
    }
  }
}

std::vector<int> BoundaryScheme::owners(int num_points) const {
  std::vector<int> out(static_cast<std::size_t>(num_points), -1);
  for (int m = 0; m < size(); ++m) {
    for (int i : boundaries_[m].indices) {
      if (i < num_points && out[i] == -1) out[i] = m;
    }
  }
  return out;
}

BoundaryScheme read_boundary_scheme(std::istream& in) {
  std::vector<BoundarySpec> boundaries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string kind;
    if (!(fields >> kind)) continue;
    BoundarySpec spec;
    if (kind == "closed") {
      spec.closed = true;
    } else if (kind != "open") {
      throw InvalidInput("boundary scheme line " + std::to_string(line_no) +
                         ": expected 'closed' or 'open', got '" + kind + "'");
    }
    std::string token;
    while (fields >> token) {
      try {
        std::size_t used = 0;
        spec.indices.push_back(std::stoi(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw InvalidInput("boundary scheme line " + std::to_string(line_no) +
                           ": bad index '" + token + "'");
      }
    }
    boundaries.push_back(std::move(spec));
  }
  return BoundaryScheme(std::move(boundaries));
}

BoundaryScheme load_boundary_scheme(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open boundary scheme '" + path + "'");
  return read_boundary_scheme(in);
}

// ---------------------------------------------------------------------------
// Encoding

bool on_grid(Point p, int height, int width) {
  return finite(p) && p.x >= -0.5 && p.x < width - 0.5 && p.y >= -0.5 && p.y < height - 0.5;
}

void render_point(std::span<double> plane, int height, int width, Point center,
                  const GaussianParams& g) {
  render_segments(plane, height, width, {Segment{center, center}}, g);
}

void render_polyline(std::span<double> plane, int height, int width,
                     const std::vector<Point>& vertices, bool closed, const GaussianParams& g) {
  std::vector<Segment> segments;
  if (vertices.size() == 1) segments.push_back({vertices[0], vertices[0]});
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    segments.push_back(canonical(vertices[i - 1], vertices[i]));
  }
  if (closed && vertices.size() > 2) segments.push_back(canonical(vertices.back(), vertices[0]));
  render_segments(plane, height, width, segments, g);
}

HeatmapStack encode_heatmap_points(const std::vector<Point>& points, int height, int width,
                                   const GaussianParams& g) {
  if (height <= 0 || width <= 0) throw InvalidInput("encode: non-positive resolution");
  g.validate();
  const int n = static_cast<int>(points.size());
  HeatmapStack out(n, height, width);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < n; ++k) {
    if (on_grid(points[k], height, width)) {
      render_point(out.channel(k), height, width, points[k], g);
    }
  }
  return out;
}

HeatmapStack encode_landmarks(const LandmarkSet& sample, const HeatmapGeometry& geom,
                              const GaussianParams& g) {
  geom.validate();
  std::vector<Point> points(sample.size());
  for (std::size_t k = 0; k < sample.size(); ++k) {
    points[k] = sample.is_valid(k) ? geom.to_heatmap(sample.points[k])
                                   : Point{std::nan(""), std::nan("")};
  }
  return encode_heatmap_points(points, geom.height, geom.width, g);
}

// ---------------------------------------------------------------------------
// Decoding

Point decode_heatmap(const PlaneView& h) {
  if (h.height < 3 || h.width < 3) throw InvalidInput("decode_heatmap: heatmap smaller than 3x3");
  int best_r = 0, best_c = 0;
  double best = h.at(0, 0);
  for (int r = 0; r < h.height; ++r) {
    for (int c = 0; c < h.width; ++c) {
      if (h.at(r, c) > best) {
        best = h.at(r, c);
        best_r = r;
        best_c = c;
      }
    }
  }
  // Neighbours in lexicographic (row, col) order; strict '>' keeps the first.
  static constexpr int kOffsets[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
  int dir = -1;
  double second = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    const int r = best_r + kOffsets[i][0];
    const int c = best_c + kOffsets[i][1];
    if (r < 0 || r >= h.height || c < 0 || c >= h.width) continue;
    if (dir == -1 || h.at(r, c) > second) {
      second = h.at(r, c);
      dir = i;
    }
  }
  return {best_c + 0.25 * kOffsets[dir][1], best_r + 0.25 * kOffsets[dir][0]};
}

std::vector<Point> decode_landmarks(const HeatmapStack& stack, const HeatmapGeometry& geom) {
  std::vector<Point> out(static_cast<std::size_t>(stack.channels()));
  for (int k = 0; k < stack.channels(); ++k) out[k] = geom.to_input(decode_heatmap(stack.view(k)));
  return out;
}

// ---------------------------------------------------------------------------
// Boundaries

HeatmapStack rasterize_boundaries(const LandmarkSet& sample, const BoundaryScheme& scheme,
                                  const HeatmapGeometry& geom, const GaussianParams& g) {
  if (scheme.size() == 0) throw InvalidInput("rasterize_boundaries: empty scheme");
  geom.validate();
  g.validate();
  scheme.validate(static_cast<int>(sample.size()));

  const int m_count = scheme.size();
  HeatmapStack out(m_count, geom.height, geom.width);
#pragma omp parallel for schedule(dynamic)
  for (int m = 0; m < m_count; ++m) {
    const BoundarySpec& spec = scheme[m];
    std::vector<Point> vertices;
    vertices.reserve(spec.indices.size());
    bool ok = true;
    for (int i : spec.indices) {
      const Point p = geom.to_heatmap(sample.points[i]);
      if (!sample.is_valid(i) || !on_grid(p, geom.height, geom.width)) {
        ok = false;
        break;
      }
      vertices.push_back(p);
    }
    if (ok) render_polyline(out.channel(m), geom.height, geom.width, vertices, spec.closed, g);
  }
  return out;
}

}  // namespace propnet
