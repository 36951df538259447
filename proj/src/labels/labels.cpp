// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/labels/labels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "pbd/error.hpp"

namespace pbd::labels {

using synth::BatteryScene;
using synth::Point;

std::string LabelStrategy::str() const {
  char buf[32];
  if (kind == Kind::Constant) {
    std::snprintf(buf, sizeof(buf), "const:%d", static_cast<int>(value));
  } else {
    std::snprintf(buf, sizeof(buf), "ada:%g", value);
  }
  return buf;
}

void LabelStrategy::validate() const {
  if (kind == Kind::Constant && (value < 1 || value != std::floor(value))) {
    throw ConfigError("constant label radius must be an integer >= 1, got " + std::to_string(value));
  }
  if (kind == Kind::Adaptive && !(value > 0.0 && value <= 1.0)) {
    throw ConfigError("adaptive label factor must lie in (0, 1], got " + std::to_string(value));
  }
}

LabelStrategy LabelStrategy::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("label strategy must look like ada:<factor> or const:<radius>: " + text);
  const std::string kind = text.substr(0, colon);
  const std::string number = text.substr(colon + 1);
  LabelStrategy s;
  if (kind == "ada") {
    s.kind = Kind::Adaptive;
  } else if (kind == "const") {
    s.kind = Kind::Constant;
  } else {
    throw ConfigError("unknown label strategy kind: " + kind);
  }
  try {
    std::size_t used = 0;
    s.value = std::stod(number, &used);
    if (used != number.size()) throw std::invalid_argument(number);
  } catch (const std::exception&) {
    throw ConfigError("label strategy value is not a number: " + text);
  }
  s.validate();
  return s;
}

void draw_disk(BinaryMask& mask, double cx, double cy, double radius) {
  const double r2 = radius * radius + 1e-9;
  const int x0 = static_cast<int>(std::floor(cx - radius));
  const int x1 = static_cast<int>(std::ceil(cx + radius));
  const int y0 = static_cast<int>(std::floor(cy - radius));
  const int y1 = static_cast<int>(std::ceil(cy + radius));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (!mask.contains(x, y)) continue;
      const double dx = x - cx;
      const double dy = y - cy;
      if (dx * dx + dy * dy <= r2) mask(x, y) = 1;
    }
  }
}

MaskPair constant_point_mask(const BatteryScene& scene, int radius) {
  if (radius < 1) throw ContractError("constant_point_mask: radius must be >= 1");
  MaskPair out{BinaryMask(scene.height, scene.width), BinaryMask(scene.height, scene.width)};
  for (const auto& p : scene.anode) draw_disk(out.anode, p.x, p.y, radius);
  for (const auto& p : scene.cathode) draw_disk(out.cathode, p.x, p.y, radius);
  return out;
}

std::vector<double> adaptive_diameters(const std::vector<Point>& points, double factor) {
  std::vector<double> out;
  if (points.size() < 2) return out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j) continue;
      nearest = std::min(nearest, std::hypot(points[i].x - points[j].x, points[i].y - points[j].y));
    }
    out.push_back(factor * nearest);
  }
  return out;
}

MaskPair adaptive_point_mask(const BatteryScene& scene, double factor) {
  if (!(factor > 0.0 && factor <= 1.0)) throw ContractError("adaptive_point_mask: factor must lie in (0, 1]");
  MaskPair out{BinaryMask(scene.height, scene.width), BinaryMask(scene.height, scene.width)};
  auto paint = [factor](BinaryMask& mask, const std::vector<Point>& pts) {
    const auto diameters = adaptive_diameters(pts, factor);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double radius = diameters.empty() ? kFallbackRadius : std::max(1.0, 0.5 * diameters[i]);
      draw_disk(mask, pts[i].x, pts[i].y, radius);
    }
  };
  paint(out.anode, scene.anode);
  paint(out.cathode, scene.cathode);
  return out;
}

namespace {
double segment_distance(double px, double py, const Point& a, const Point& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(a.x + t * dx - px, a.y + t * dy - py);
}

void draw_polyline(BinaryMask& mask, std::vector<Point> pts, int thickness) {
  if (pts.empty()) return;
  const double half = 0.5 * thickness;
  if (pts.size() == 1) {
    draw_disk(mask, pts[0].x, pts[0].y, std::max(1.0, half));
    return;
  }
  synth::sort_points(pts);
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const Point& a = pts[k];
    const Point& b = pts[k + 1];
    const int x0 = static_cast<int>(std::floor(std::min(a.x, b.x) - half));
    const int x1 = static_cast<int>(std::ceil(std::max(a.x, b.x) + half));
    const int y0 = static_cast<int>(std::floor(std::min(a.y, b.y) - half));
    const int y1 = static_cast<int>(std::ceil(std::max(a.y, b.y) + half));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (mask.contains(x, y) && segment_distance(x, y, a, b) <= half + 1e-9) mask(x, y) = 1;
      }
    }
  }
}
}  // namespace

MaskPair line_mask(const BatteryScene& scene, int thickness) {
  if (thickness < 1) throw ContractError("line_mask: thickness must be >= 1");
  MaskPair out{BinaryMask(scene.height, scene.width), BinaryMask(scene.height, scene.width)};
  draw_polyline(out.anode, scene.anode, thickness);
  draw_polyline(out.cathode, scene.cathode, thickness);
  return out;
}

std::pair<int, int> count_labels(const MaskPair& point_masks) {
  return {count_components(point_masks.anode), count_components(point_masks.cathode)};
}

LabelSet make_labels(const BatteryScene& scene, const LabelStrategy& strategy, int line_thickness) {
  strategy.validate();
  LabelSet out;
  out.point = strategy.kind == LabelStrategy::Kind::Constant
                  ? constant_point_mask(scene, static_cast<int>(strategy.value))
                  : adaptive_point_mask(scene, strategy.value);
  out.line = line_mask(scene, line_thickness);
  std::tie(out.n_anode, out.n_cathode) = count_labels(out.point);
  return out;
}

}  // namespace pbd::labels
