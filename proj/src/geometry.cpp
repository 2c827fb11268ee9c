#include "propnet/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "propnet/error.hpp"
#include "propnet/random.hpp"

namespace propnet {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

double parse_double(std::string_view field, std::size_t index) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(index, "expected a finite number, got '" + std::string(field) + "'");
  }
  return value;
}

std::vector<Point> parse_points(const std::vector<std::string_view>& fields, int num_points) {
  std::vector<Point> points(static_cast<std::size_t>(num_points));
  for (int k = 0; k < num_points; ++k) {
    points[k].x = parse_double(fields[2 * k], 2 * k);
    points[k].y = parse_double(fields[2 * k + 1], 2 * k + 1);
  }
  return points;
}

bool inside_frame(Point p, double width, double height) {
  return p.x >= 0.0 && p.x < width && p.y >= 0.0 && p.y < height;
}

BBox transform_bbox(const BBox& box, const Affine2D& t) {
  const std::array<Point, 4> corners{{{box.x_min, box.y_min},
                                      {box.x_max, box.y_min},
                                      {box.x_min, box.y_max},
                                      {box.x_max, box.y_max}}};
  BBox out{INFINITY, INFINITY, -INFINITY, -INFINITY};
  for (const Point& c : corners) {
    const Point q = t.apply(c);
    out.x_min = std::min(out.x_min, q.x);
    out.y_min = std::min(out.y_min, q.y);
    out.x_max = std::max(out.x_max, q.x);
    out.y_max = std::max(out.y_max, q.y);
  }
  return out;
}

std::vector<LandmarkSet> read_records(std::istream& in, int num_points, bool predictions) {
  std::vector<LandmarkSet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_fields(line).empty()) continue;
    try {
      out.push_back(predictions ? parse_prediction_line(line, num_points)
                                : parse_wflw_line(line, num_points));
    } catch (const std::exception& e) {
      throw InvalidInput("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::string_view attribute_name(int index) {
  static constexpr std::array<std::string_view, kNumAttributes> names{
      "pose", "expression", "illumination", "makeup", "occlusion", "blur"};
  return names.at(static_cast<std::size_t>(index));
}

LandmarkSet::LandmarkSet(std::vector<Point> pts, std::string id, BBox box, AttributeFlags attrs)
    : points(std::move(pts)),
      valid(points.size(), 1),
      image_id(std::move(id)),
      bbox(box),
      attributes(attrs) {}

// ---------------------------------------------------------------------------
// Flip table

FlipPairTable::FlipPairTable(int num_points, const std::vector<std::pair<int, int>>& pairs)
    : mirror_(static_cast<std::size_t>(num_points), -1) {
  if (num_points <= 0) throw InvalidInput("flip table: num_points must be positive");
  auto claim = [&](int index, int target) {
    if (index < 0 || index >= num_points) {
      throw InvalidInput("flip table: index " + std::to_string(index) + " out of range");
    }
    if (mirror_[index] != -1) {
      throw InvalidInput("flip table: index " + std::to_string(index) + " listed twice");
    }
    mirror_[index] = target;
  };
  for (const auto& [i, j] : pairs) {
    if (i == j) {
      claim(i, i);
      continue;
    }
    claim(i, j);
    claim(j, i);
    pairs_.emplace_back(std::min(i, j), std::max(i, j));
  }
  for (int k = 0; k < num_points; ++k) {
    if (mirror_[k] == -1) mirror_[k] = k;
  }
}

std::vector<int> FlipPairTable::self_paired() const {
  std::vector<int> out;
  for (int k = 0; k < num_points(); ++k) {
    if (mirror_[k] == k) out.push_back(k);
  }
  return out;
}

FlipPairTable read_flip_pairs(std::istream& in, int num_points) {
  std::vector<std::pair<int, int>> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != 2) {
      throw InvalidInput("flip table line " + std::to_string(line_no) + ": expected 'i j'");
    }
    int i = 0, j = 0;
    const auto r1 = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), i);
    const auto r2 = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), j);
    if (r1.ec != std::errc() || r2.ec != std::errc()) {
      throw InvalidInput("flip table line " + std::to_string(line_no) + ": non-integer index");
    }
    pairs.emplace_back(i, j);
  }
  return FlipPairTable(num_points, pairs);
}

FlipPairTable load_flip_pairs(const std::string& path, int num_points) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open flip table '" + path + "'");
  return read_flip_pairs(in, num_points);
}

// ---------------------------------------------------------------------------
// Affine

Affine2D Affine2D::inverse() const {
  const double det = a * e - b * d;
  if (det == 0.0 || !std::isfinite(det)) throw InvalidInput("Affine2D: singular transform");
  Affine2D inv;
  inv.a = e / det;
  inv.b = -b / det;
  inv.d = -d / det;
  inv.e = a / det;
  inv.c = -(inv.a * c + inv.b * f);
  inv.f = -(inv.d * c + inv.e * f);
  return inv;
}

Affine2D Affine2D::compose(const Affine2D& o) const {
  Affine2D r;
  r.a = a * o.a + b * o.d;
  r.b = a * o.b + b * o.e;
  r.c = a * o.c + b * o.f + c;
  r.d = d * o.a + e * o.d;
  r.e = d * o.b + e * o.e;
  r.f = d * o.c + e * o.f + f;
  return r;
}

Affine2D Affine2D::rotation(double degrees, Point center) {
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad);
  const double sn = std::sin(rad);
  return translation(center.x, center.y)
      .compose(Affine2D{cs, -sn, 0.0, sn, cs, 0.0})
      .compose(translation(-center.x, -center.y));
}

LandmarkSet transform(const LandmarkSet& sample, const Affine2D& t) {
  LandmarkSet out = sample;
  for (Point& p : out.points) p = t.apply(p);
  out.bbox = transform_bbox(sample.bbox, t);
  return out;
}

// ---------------------------------------------------------------------------
// Records

LandmarkSet parse_wflw_line(std::string_view line, int num_points) {
  if (num_points <= 0) throw InvalidInput("parse_wflw_line: num_points must be positive");
  const auto fields = split_fields(line);
  const std::size_t coords = 2 * static_cast<std::size_t>(num_points);
  const std::size_t expected = coords + 4 + kNumAttributes + 1;
  if (fields.size() != expected) throw MalformedRecord(expected, fields.size());

  LandmarkSet out(parse_points(fields, num_points), std::string(fields.back()), {}, {});
  out.bbox = {parse_double(fields[coords], coords), parse_double(fields[coords + 1], coords + 1),
              parse_double(fields[coords + 2], coords + 2),
              parse_double(fields[coords + 3], coords + 3)};
  if (out.bbox.degenerate()) throw InvalidInput("parse_wflw_line: degenerate bbox");
  for (int c = 0; c < kNumAttributes; ++c) {
    const std::size_t index = coords + 4 + c;
    const std::string_view f = fields[index];
    if (f != "0" && f != "1") throw ParseError(index, "attribute must be 0 or 1");
    out.attributes[c] = f == "1" ? 1 : 0;
  }
  return out;
}

LandmarkSet parse_prediction_line(std::string_view line, int num_points) {
  if (num_points <= 0) throw InvalidInput("parse_prediction_line: num_points must be positive");
  const auto fields = split_fields(line);
  const std::size_t coords = 2 * static_cast<std::size_t>(num_points);
  const std::size_t full = coords + 4 + kNumAttributes + 1;
  if (fields.size() != coords && fields.size() != coords + 1 && fields.size() != full) {
    throw MalformedRecord(coords, fields.size());
  }
  std::string id = fields.size() > coords ? std::string(fields.back()) : std::string();
  return LandmarkSet(parse_points(fields, num_points), std::move(id), {}, {});
}

std::vector<LandmarkSet> read_annotations(std::istream& in, int num_points) {
  return read_records(in, num_points, false);
}

std::vector<LandmarkSet> load_annotations(const std::string& path, int num_points) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open annotation file '" + path + "'");
  return read_records(in, num_points, false);
}

std::vector<LandmarkSet> load_predictions(const std::string& path, int num_points) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open prediction file '" + path + "'");
  return read_records(in, num_points, true);
}

std::string format_record(const LandmarkSet& sample) {
  std::string out;
  char buf[64];
  auto put = [&](double v) {
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    if (!out.empty()) out.push_back(' ');
    out.append(buf, r.ptr);
  };
  for (const Point& p : sample.points) {
    put(p.x);
    put(p.y);
  }
  put(sample.bbox.x_min);
  put(sample.bbox.y_min);
  put(sample.bbox.x_max);
  put(sample.bbox.y_max);
  for (auto flag : sample.attributes) out += flag ? " 1" : " 0";
  out.push_back(' ');
  out += sample.image_id.empty() ? std::string("-") : sample.image_id;
  return out;
}

// ---------------------------------------------------------------------------
// Transforms

CropResult crop_resize(const LandmarkSet& sample, int out_size, double margin) {
  if (out_size <= 0) throw InvalidInput("crop_resize: out_size must be positive");
  if (sample.bbox.degenerate()) throw InvalidInput("crop_resize: degenerate bbox");
  if (!(margin >= 0.0)) throw InvalidInput("crop_resize: margin must be non-negative");

  const BBox& b = sample.bbox;
  const double x0 = b.x_min - margin * b.width();
  const double y0 = b.y_min - margin * b.height();
  const double sx = out_size / (b.width() * (1.0 + 2.0 * margin));
  const double sy = out_size / (b.height() * (1.0 + 2.0 * margin));
  const Affine2D t{sx, 0.0, -sx * x0, 0.0, sy, -sy * y0};

  CropResult result{t, transform(sample, t)};
  LandmarkSet& out = result.sample;
  out.bbox = {0.0, 0.0, static_cast<double>(out_size), static_cast<double>(out_size)};
  out.valid.resize(out.points.size(), 1);
  for (std::size_t k = 0; k < out.points.size(); ++k) {
    if (!inside_frame(out.points[k], out_size, out_size)) out.valid[k] = 0;
  }
  return result;
}

LandmarkSet mirror(const LandmarkSet& sample, const FlipPairTable& table, int frame_width) {
  if (table.num_points() != static_cast<int>(sample.size())) {
    throw InvalidInput("mirror: flip table size does not match landmark count");
  }
  const double edge = frame_width - 1.0;
  LandmarkSet out = sample;
  out.valid.resize(out.points.size(), 1);
  for (std::size_t k = 0; k < sample.size(); ++k) {
    const auto target = static_cast<std::size_t>(table.mirror(static_cast<int>(k)));
    out.points[target] = {edge - sample.points[k].x, sample.points[k].y};
    out.valid[target] = sample.is_valid(k) ? 1 : 0;
  }
  out.bbox.x_min = edge - sample.bbox.x_max;
  out.bbox.x_max = edge - sample.bbox.x_min;
  return out;
}

LandmarkSet augment(const LandmarkSet& sample, const AugmentParams& params,
                    const FlipPairTable& flip_table) {
  if (!(params.flip_prob >= 0.0 && params.flip_prob <= 1.0)) {
    throw InvalidInput("augment: flip_prob outside [0, 1]");
  }
  if (params.rotation_deg < 0.0 || params.scale_frac < 0.0 || params.crop_px < 0) {
    throw InvalidInput("augment: ranges must be non-negative half-widths");
  }
  Rng rng(params.rng_seed);
  // Fixed draw order so a given seed always produces the same transform.
  const double angle = rng.uniform(-params.rotation_deg, params.rotation_deg);
  const double scale = 1.0 + rng.uniform(-params.scale_frac, params.scale_frac);
  const auto tx = rng.uniform_int(-params.crop_px, params.crop_px);
  const auto ty = rng.uniform_int(-params.crop_px, params.crop_px);
  const bool flip = rng.bernoulli(params.flip_prob);

  const double size = params.frame_size;
  const Point center{size / 2.0, size / 2.0};
  LandmarkSet out = sample;
  out.valid.resize(out.points.size(), 1);
  if (angle != 0.0 || scale != 1.0 || tx != 0 || ty != 0) {
    const Affine2D t = Affine2D::translation(static_cast<double>(tx), static_cast<double>(ty))
                           .compose(Affine2D::translation(center.x, center.y))
                           .compose(Affine2D::scaling(scale, scale))
                           .compose(Affine2D::translation(-center.x, -center.y))
                           .compose(Affine2D::rotation(angle, center));
    out = transform(out, t);
  }
  if (flip) out = mirror(out, flip_table, params.frame_size);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!inside_frame(out.points[k], size, size)) out.valid[k] = 0;
  }
  return out;
}

std::array<double, kNumAttributes> attribute_fractions(const std::vector<LandmarkSet>& samples) {
  if (samples.empty()) throw InvalidInput("attribute_fractions: empty sample list");
  std::array<std::size_t, kNumAttributes> counts{};
  for (const auto& s : samples) {
    for (int c = 0; c < kNumAttributes; ++c) counts[c] += s.attributes[c] ? 1 : 0;
  }
  std::array<double, kNumAttributes> out{};
  for (int c = 0; c < kNumAttributes; ++c) {
    out[c] = static_cast<double>(counts[c]) / static_cast<double>(samples.size());
  }
  return out;
}

}  // namespace propnet
