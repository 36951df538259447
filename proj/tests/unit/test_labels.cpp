// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "pbd/error.hpp"
#include "pbd/labels/labels.hpp"
#include "pbd/synth/generator.hpp"

using namespace pbd;
using namespace pbd::labels;
using synth::BatteryScene;
using synth::Point;

namespace {

BatteryScene blank(int h = 64, int w = 64) {
  BatteryScene s;
  s.height = h;
  s.width = w;
  return s;
}

// Reference flood fill with an explicit queue, independent of label_components.
int oracle_components(const BinaryMask& m) {
  std::vector<int> seen(m.pixels.size(), 0);
  int count = 0;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m(x, y) || seen[y * m.width + x]) continue;
      ++count;
      std::vector<std::pair<int, int>> queue{{x, y}};
      seen[y * m.width + x] = 1;
      for (std::size_t q = 0; q < queue.size(); ++q) {
        auto [cx, cy] = queue[q];
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (m.contains(nx, ny) && m(nx, ny) && !seen[ny * m.width + nx]) {
              seen[ny * m.width + nx] = 1;
              queue.push_back({nx, ny});
            }
          }
      }
    }
  }
  return count;
}

}  // namespace

TEST_CASE("constant radius disks") {
  BatteryScene s = blank();
  s.anode = {{20, 30}};
  const MaskPair m = constant_point_mask(s, 1);
  CHECK(mask_area(m.anode) == 5);
  CHECK(mask_area(m.cathode) == 0);

  s.anode = {{20, 30}, {24, 30}};
  const MaskPair merged = constant_point_mask(s, 3);
  CHECK(oracle_components(merged.anode) == 1);
  CHECK(count_labels(merged).first == 1);

  const BatteryScene empty = blank();
  const MaskPair z = constant_point_mask(empty, 3);
  CHECK(count_labels(z) == std::pair{0, 0});

  // Clipping at the border.
  BatteryScene edge = blank();
  edge.anode = {{0, 0}};
  CHECK(mask_area(constant_point_mask(edge, 1).anode) == 3);
  CHECK_THROWS_AS(constant_point_mask(s, 0), ContractError);
}

TEST_CASE("adaptive diameter arithmetic") {
  const auto d = adaptive_diameters({{10, 50}, {50, 50}, {90, 50}}, 0.3);
  REQUIRE(d.size() == 3);
  for (double v : d) CHECK(v == doctest::Approx(12.0));
  CHECK(adaptive_diameters({{10, 50}}, 0.3).empty());

  BatteryScene s = blank(128, 128);
  s.anode = {{10, 50}, {50, 50}, {90, 50}};
  const MaskPair m = adaptive_point_mask(s, 0.3);
  // Uniform pitch gives identical disks.
  BatteryScene one = blank(128, 128);
  one.anode = {{50, 50}};
  const MaskPair disk = constant_point_mask(one, 6);
  CHECK(mask_area(m.anode) == 3 * mask_area(disk.anode));
  CHECK(m.anode(56, 50) == 1);
  CHECK(m.anode(57, 50) == 0);

  // Single endpoint falls back to radius 3.
  const MaskPair f = adaptive_point_mask(one, 0.3);
  CHECK(mask_area(f.anode) == mask_area(constant_point_mask(one, kFallbackRadius).anode));
}

TEST_CASE("constant and adaptive agree at matching pitch") {
  const int radius = 3;
  const double factor = 0.3;
  const int pitch = 20;  // 2 * radius / factor
  BatteryScene s = blank(64, 128);
  for (int i = 0; i < 5; ++i) s.anode.push_back({10 + i * pitch, 40});
  CHECK(constant_point_mask(s, radius).anode == adaptive_point_mask(s, factor).anode);
}

TEST_CASE("label invariants on generated scenes") {
  const synth::RenderConfig cfg;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const BatteryScene s = synth::sample_scene(seed, cfg);
    std::size_t prev_a = 0, prev_c = 0;
    for (double f : {0.1, 0.3, 0.5}) {
      const MaskPair m = adaptive_point_mask(s, f);
      CHECK(oracle_components(m.anode) == static_cast<int>(s.anode.size()));
      CHECK(oracle_components(m.cathode) == static_cast<int>(s.cathode.size()));
      CHECK(mask_area(m.anode) >= prev_a);
      CHECK(mask_area(m.cathode) >= prev_c);
      prev_a = mask_area(m.anode);
      prev_c = mask_area(m.cathode);
    }
    const LabelSet l = make_labels(s, LabelStrategy::parse("ada:0.3"));
    CHECK(l.n_anode == static_cast<int>(s.anode.size()));
    CHECK(l.n_cathode == static_cast<int>(s.cathode.size()));
    for (const auto& p : s.anode) CHECK(l.point.anode(p.x, p.y) == 1);
  }
}

TEST_CASE("line masks") {
  BatteryScene s = blank();
  s.anode = {{10, 40}, {30, 40}, {50, 40}};
  const MaskPair m = line_mask(s, 3);
  CHECK(count_components(m.anode) == 1);
  for (const auto& p : s.anode) CHECK(m.anode(p.x, p.y) == 1);
  // Collinear: a straight 3-pixel band from x=10 to x=50.
  for (int x = 10; x <= 50; ++x) {
    CHECK(m.anode(x, 39) == 1);
    CHECK(m.anode(x, 40) == 1);
    CHECK(m.anode(x, 41) == 1);
    CHECK(m.anode(x, 38) == 0);
  }
  CHECK(mask_area(m.anode) == 41 * 3 + 6);  // three cap pixels past each end
  s.anode = {{20, 20}};
  CHECK(count_components(line_mask(s, 3).anode) == 1);
  CHECK_THROWS_AS(line_mask(s, 0), ContractError);

  const synth::RenderConfig cfg;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const BatteryScene g = synth::sample_scene(seed, cfg);
    const MaskPair lm = line_mask(g, kDefaultLineThickness);
    CHECK(count_components(lm.anode) == 1);
    for (const auto& p : g.cathode) CHECK(lm.cathode(p.x, p.y) == 1);
  }
}

TEST_CASE("labels commute with horizontal flip") {
  const synth::RenderConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BatteryScene s = synth::sample_scene(seed, cfg);
    const BatteryScene f = synth::flip_horizontal(s);
    for (const char* strategy : {"ada:0.3", "const:3", "ada:0.5"}) {
      const LabelSet a = make_labels(f, LabelStrategy::parse(strategy));
      const LabelSet b = make_labels(s, LabelStrategy::parse(strategy));
      CHECK(a.point.anode == flip_horizontal(b.point.anode));
      CHECK(a.point.cathode == flip_horizontal(b.point.cathode));
      CHECK(a.line.anode == flip_horizontal(b.line.anode));
      CHECK(a.line.cathode == flip_horizontal(b.line.cathode));
    }
  }
}

TEST_CASE("strategy parsing") {
  CHECK(LabelStrategy::parse("ada:0.3").kind == LabelStrategy::Kind::Adaptive);
  CHECK(LabelStrategy::parse("const:5").value == 5);
  CHECK(LabelStrategy::parse("ada:0.1").str() == "ada:0.1");
  CHECK_THROWS_AS(LabelStrategy::parse("ada:0"), ConfigError);
  CHECK_THROWS_AS(LabelStrategy::parse("ada:1.5"), ConfigError);
  CHECK_THROWS_AS(LabelStrategy::parse("const:0"), ConfigError);
  CHECK_THROWS_AS(LabelStrategy::parse("const:2.5"), ConfigError);
  CHECK_THROWS_AS(LabelStrategy::parse("gauss:2"), ConfigError);
  CHECK_THROWS_AS(LabelStrategy::parse("ada"), ConfigError);
  CHECK_THROWS_AS(LabelStrategy::parse("ada:x"), ConfigError);
}
