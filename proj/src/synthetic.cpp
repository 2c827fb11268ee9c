#include "propnet/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "propnet/error.hpp"
#include "propnet/kernels.hpp"

namespace propnet {

namespace {

void ellipse(std::vector<Point>& out, Point c, double rx, double ry, int count) {
  // Starts at the left corner and runs clockwise on screen: upper arc first.
  for (int k = 0; k < count; ++k) {
    const double a = std::numbers::pi - 2.0 * std::numbers::pi * k / count;
    out.push_back({c.x + rx * std::cos(a), c.y - ry * std::sin(a)});
  }
}

void brow(std::vector<Point>& out, double side) {
  // Upper arc left to right, then the lower arc back.
  const double x0 = side < 0 ? -0.8 : 0.2;
  for (int k = 0; k < 5; ++k) {
    const double t = k / 4.0;
    out.push_back({x0 + 0.6 * t, -0.5 - 0.08 * std::sin(std::numbers::pi * t)});
  }
  for (int k = 0; k < 4; ++k) {
    const double t = (k + 1) / 5.0;
    const double x = x0 + 0.6 - 0.6 * t;
    out.push_back({x, -0.42 - 0.05 * std::sin(std::numbers::pi * t)});
  }
}

}  // namespace

std::vector<Point> face_template_98() {
  std::vector<Point> p;
  p.reserve(98);
  for (int i = 0; i <= 32; ++i) {
    const double a = std::numbers::pi * i / 32.0;
    p.push_back({-std::cos(a), -0.1 + std::sin(a)});
  }
  brow(p, -1.0);  // 33..41
  brow(p, 1.0);   // 42..50
  for (int i = 0; i < 4; ++i) p.push_back({0.0, -0.3 + 0.15 * i});  // 51..54
  for (int i = 0; i < 5; ++i) {
    const double x = -0.2 + 0.1 * i;
    p.push_back({x, 0.25 + 0.04 * (1.0 - std::abs(x) / 0.2)});  // 55..59
  }
  ellipse(p, {-0.45, -0.2}, 0.18, 0.08, 8);  // 60..67
  ellipse(p, {0.45, -0.2}, 0.18, 0.08, 8);   // 68..75
  ellipse(p, {0.0, 0.55}, 0.35, 0.15, 12);   // 76..87
  ellipse(p, {0.0, 0.55}, 0.25, 0.06, 8);    // 88..95
  p.push_back({-0.45, -0.2});                // 96
  p.push_back({0.45, -0.2});                 // 97
  return p;
}

LandmarkSet synthetic_face(Rng& rng, int frame_size, double attribute_prob) {
  if (frame_size < 64) throw InvalidInput("synthetic_face: frame too small");
  const double half = frame_size / 2.0;
  const double size = rng.uniform(0.3, 0.36) * frame_size;
  const double cx = half + rng.uniform(-0.03, 0.03) * frame_size;
  const double cy = half - 0.2 * size + rng.uniform(-0.03, 0.03) * frame_size;
  const double angle = rng.uniform(-15.0, 15.0) * std::numbers::pi / 180.0;
  const double ca = std::cos(angle), sa = std::sin(angle);
  const double jitter = 0.006 * frame_size;

  std::vector<Point> pts;
  for (const Point& t : face_template_98()) {
    const double x = t.x * size, y = t.y * size;
    pts.push_back({cx + ca * x - sa * y + rng.uniform(-jitter, jitter),
                   cy + sa * x + ca * y + rng.uniform(-jitter, jitter)});
  }
  AttributeFlags attrs{};
  for (auto& a : attrs) a = rng.bernoulli(attribute_prob) ? 1 : 0;
  BBox box{0.0, 0.0, static_cast<double>(frame_size), static_cast<double>(frame_size)};
  return LandmarkSet(std::move(pts), "synthetic", box, attrs);
}

Tensor3 lowpass_noise(Rng& rng, int channels, int height, int width, double sigma) {
  if (!(sigma > 0.0)) throw InvalidInput("lowpass_noise: sigma must be positive");
  Tensor3 noise(channels, height, width);
  for (double& v : noise.data()) v = rng.uniform(-1.0, 1.0);

  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps;
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    taps.push_back(std::exp(-k * k / (2.0 * sigma * sigma)));
    sum += taps.back();
  }
  for (double& t : taps) t /= sum;

  Tensor3 rows(channels, height, width), out(channels, height, width);
  for (int c = 0; c < channels; ++c) {
    for (int r = 0; r < height; ++r) {
      for (int x = 0; x < width; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += taps[k + radius] * noise(c, r, kernels::pad_index(x + k, width, Padding::circular));
        }
        rows(c, r, x) = acc;
      }
    }
    for (int r = 0; r < height; ++r) {
      for (int x = 0; x < width; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += taps[k + radius] * rows(c, kernels::pad_index(r + k, height, Padding::circular), x);
        }
        out(c, r, x) = acc;
      }
    }
  }
  return out;
}

}  // namespace propnet
