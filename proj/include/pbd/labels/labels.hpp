// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pbd/raster.hpp"
#include "pbd/synth/scene.hpp"

namespace pbd::labels {

struct MaskPair {
  BinaryMask anode;
  BinaryMask cathode;
};

/// Point-mask strategy: constant radius ("const:3") or distance-adaptive
/// diameter factor ("ada:0.3").
struct LabelStrategy {
  enum class Kind { Constant, Adaptive };
  Kind kind = Kind::Adaptive;
  double value = 0.3;

  std::string str() const;
  /// Throws ConfigError on malformed text or out-of-range values.
  static LabelStrategy parse(const std::string& text);
  void validate() const;
};

struct LabelSet {
  MaskPair point;
  MaskPair line;
  int n_anode = 0;
  int n_cathode = 0;
};

inline constexpr int kDefaultLineThickness = 3;
inline constexpr int kFallbackRadius = 3;

/// Sets every pixel whose centre lies within `radius` of (cx, cy).
void draw_disk(BinaryMask& mask, double cx, double cy, double radius);

/// Filled disks of `radius` at every endpoint, clipped to the image.
MaskPair constant_point_mask(const synth::BatteryScene& scene, int radius);

/// Disk diameter per endpoint = factor x distance to the nearest endpoint of
/// the same polarity. Radii below one pixel are raised to one.
MaskPair adaptive_point_mask(const synth::BatteryScene& scene, double factor);

/// Per-endpoint diameters used by adaptive_point_mask; empty when fewer than
/// two points (the caller falls back to a constant radius).
std::vector<double> adaptive_diameters(const std::vector<synth::Point>& points, double factor);

/// Polyline through same-polarity endpoints in ascending-x order.
MaskPair line_mask(const synth::BatteryScene& scene, int thickness = kDefaultLineThickness);

/// 8-connected component counts of the two point masks.
std::pair<int, int> count_labels(const MaskPair& point_masks);

LabelSet make_labels(const synth::BatteryScene& scene, const LabelStrategy& strategy,
                     int line_thickness = kDefaultLineThickness);

}  // namespace pbd::labels
