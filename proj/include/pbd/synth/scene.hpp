// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pbd::synth {

/// Plate appearance / interference taxonomy.
enum class Attribute : std::uint8_t { P, T, A, PI, BI, TRI, TAI, SI };

inline constexpr std::array<Attribute, 8> kAllAttributes = {
    Attribute::P, Attribute::T, Attribute::A, Attribute::PI,
    Attribute::BI, Attribute::TRI, Attribute::TAI, Attribute::SI};

std::string_view to_string(Attribute a);
Attribute parse_attribute(std::string_view s);

class AttributeSet {
 public:
  AttributeSet() = default;
  AttributeSet(std::initializer_list<Attribute> attrs) {
    for (auto a : attrs) insert(a);
  }

  void insert(Attribute a) { bits_ |= bit(a); }
  bool contains(Attribute a) const { return (bits_ & bit(a)) != 0; }
  bool empty() const { return bits_ == 0; }
  int size() const;
  bool subset_of(const AttributeSet& other) const { return (bits_ & ~other.bits_) == 0; }
  std::vector<Attribute> to_vector() const;
  std::vector<std::string> names() const;

  friend bool operator==(const AttributeSet&, const AttributeSet&) = default;

 private:
  static std::uint8_t bit(Attribute a) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(a)); }
  std::uint8_t bits_ = 0;
};

enum class Shot { Close, Medium, Long };
enum class Split { Regular, Difficult, Tough };
enum class Polarity { Anode, Cathode };

std::string_view to_string(Shot s);
std::string_view to_string(Split s);
Shot parse_shot(std::string_view s);
Split parse_split(std::string_view s);

/// Integer pixel coordinate; origin top-left, x right, y down.
struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

/// Near-vertical stroke from (top_x, top_y) down to its endpoint.
struct PlateStroke {
  Polarity polarity = Polarity::Anode;
  Point endpoint;
  double top_x = 0;
  double top_y = 0;
  double thickness = 2;
};

/// Side branch leaving a plate at `branch` and ending at an unannotated tip.
struct Fork {
  double branch_x = 0, branch_y = 0;
  double tip_x = 0, tip_y = 0;
  double thickness = 1.5;
};

/// Everything the renderer needs beyond the annotated endpoints.
struct SceneLayout {
  std::vector<PlateStroke> plates;
  std::vector<PlateStroke> distractors;  // neighbouring battery (PI)
  std::vector<Fork> forks;               // BI
  std::optional<Rect> tray;              // TRI
  std::vector<Rect> tabs;                // TAI
  std::optional<Rect> separator;         // SI
  std::vector<Rect> occluders;           // A
  Rect body;
  bool blurred = false;
  double pitch = 0;
};

/// Ground truth of one synthetic image. Endpoint lists are sorted by ascending x.
struct BatteryScene {
  std::vector<Point> anode;
  std::vector<Point> cathode;
  AttributeSet attributes;
  Shot shot = Shot::Medium;
  Split split = Split::Regular;
  int height = 0;
  int width = 0;
  std::uint64_t seed = 0;
  SceneLayout layout;  // empty when loaded from an annotation file
};

/// Median horizontal gap between consecutive anodes; 0 with fewer than two.
double anode_pitch(const BatteryScene& scene);

/// Sort key for endpoints: ascending x, ties by ascending y.
void sort_points(std::vector<Point>& points);

/// Mirror about the vertical axis; endpoint lists are re-sorted.
BatteryScene flip_horizontal(const BatteryScene& scene);

}  // namespace pbd::synth
