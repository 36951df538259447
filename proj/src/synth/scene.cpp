// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/synth/scene.hpp"

#include <algorithm>
#include <bit>

#include "pbd/error.hpp"

namespace pbd::synth {

namespace {
constexpr std::array<std::string_view, 8> kAttributeNames = {"P", "T", "A", "PI", "BI", "TRI", "TAI", "SI"};
}

std::string_view to_string(Attribute a) { return kAttributeNames[static_cast<std::size_t>(a)]; }

Attribute parse_attribute(std::string_view s) {
  for (std::size_t i = 0; i < kAttributeNames.size(); ++i) {
    if (kAttributeNames[i] == s) return static_cast<Attribute>(i);
  }
  throw DataError("unknown attribute: " + std::string(s));
}

int AttributeSet::size() const { return std::popcount(bits_); }

std::vector<Attribute> AttributeSet::to_vector() const {
  std::vector<Attribute> out;
  for (auto a : kAllAttributes) {
    if (contains(a)) out.push_back(a);
  }
  return out;
}

std::vector<std::string> AttributeSet::names() const {
  std::vector<std::string> out;
  for (auto a : to_vector()) out.emplace_back(to_string(a));
  return out;
}

std::string_view to_string(Shot s) {
  switch (s) {
    case Shot::Close: return "close";
    case Shot::Medium: return "medium";
    case Shot::Long: return "long";
  }
  return "medium";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Regular: return "regular";
    case Split::Difficult: return "difficult";
    case Split::Tough: return "tough";
  }
  return "regular";
}

Shot parse_shot(std::string_view s) {
  if (s == "close") return Shot::Close;
  if (s == "medium") return Shot::Medium;
  if (s == "long") return Shot::Long;
  throw DataError("unknown shot: " + std::string(s));
}

Split parse_split(std::string_view s) {
  if (s == "regular") return Split::Regular;
  if (s == "difficult") return Split::Difficult;
  if (s == "tough") return Split::Tough;
  throw DataError("unknown split: " + std::string(s));
}

double anode_pitch(const BatteryScene& scene) {
  if (scene.anode.size() < 2) return 0.0;
  std::vector<double> gaps;
  for (std::size_t i = 1; i < scene.anode.size(); ++i) gaps.push_back(scene.anode[i].x - scene.anode[i - 1].x);
  std::sort(gaps.begin(), gaps.end());
  const std::size_t m = gaps.size() / 2;
  return gaps.size() % 2 ? gaps[m] : 0.5 * (gaps[m - 1] + gaps[m]);
}

void sort_points(std::vector<Point>& points) {
  std::sort(points.begin(), points.end(), [](const Point& a, const Point& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
}

BatteryScene flip_horizontal(const BatteryScene& scene) {
  BatteryScene out = scene;
  auto mirror = [&](std::vector<Point>& pts) {
    for (auto& p : pts) p.x = scene.width - 1 - p.x;
    sort_points(pts);
  };
  mirror(out.anode);
  mirror(out.cathode);
  out.layout = SceneLayout{};
  return out;
}

}  // namespace pbd::synth
