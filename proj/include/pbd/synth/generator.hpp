// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>

#include "pbd/random.hpp"
#include "pbd/raster.hpp"
#include "pbd/synth/scene.hpp"

namespace pbd::synth {

/// Smallest horizontal distance between two endpoints of the same polarity.
inline constexpr int kMinEndpointGap = 4;

struct Range {
  double lo = 0;
  double hi = 0;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
};

/// Procedural generator parameters. Distances are in pixels at medium shot;
/// close/long shots scale pitch and overhang.
struct RenderConfig {
  int height = 128;
  int width = 128;
  IntRange anode_count{4, 10};
  Range pitch{9.0, 22.0};
  Range overhang{4.0, 12.0};
  Range thickness{1.6, 2.6};
  int margin = 8;
  double close_scale = 1.3;
  double long_scale = 0.75;
  double min_pitch = 6.0;
  double dense_factor = 0.85;  // pitch multiplier for tilted (T) scenes

  double background = 200.0;
  double body = 150.0;
  double anode_intensity = 55.0;
  double cathode_intensity = 90.0;
  double noise_sigma = 4.0;
  double blur_sigma_clear = 0.6;
  double blur_sigma_blur = 1.2;
  double blur_fraction = 0.3;

  double tilt_max = 0.25;            // horizontal drift per unit stroke length
  double separator_contrast = 0.35;  // stroke/band contrast relative to stroke/body
  double tray_intensity = 40.0;
  double tab_intensity = 45.0;
  int side_reserve = 18;             // border room kept for PI / TRI

  double pure_fraction = 0.4;
  int max_interference = 3;
  double tough_pitch_threshold = 8.0;
  double train_fraction = 0.6;

  /// Throws ConfigError for empty ranges or geometry that cannot fit.
  void validate() const;

  static RenderConfig desk() { return {}; }
  /// Ranges at the original 352x352 resolution.
  static RenderConfig full_resolution();
};

/// Deterministic function of (seed, cfg, forced).
BatteryScene sample_scene(std::uint64_t seed, const RenderConfig& cfg,
                          std::optional<AttributeSet> forced = std::nullopt);

Split assign_split(const BatteryScene& scene, double tough_pitch_threshold = RenderConfig{}.tough_pitch_threshold);

/// 8-bit grayscale rendering; noise is seeded from `scene.seed`.
GrayImage render(const BatteryScene& scene, const RenderConfig& cfg);

using pbd::mix_seed;

}  // namespace pbd::synth
