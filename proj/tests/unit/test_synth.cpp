// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pbd/error.hpp"
#include "pbd/synth/dataset.hpp"
#include "pbd/synth/generator.hpp"

using namespace pbd;
using namespace pbd::synth;
namespace fs = std::filesystem;

namespace {

bool sorted_by_x(const std::vector<Point>& pts) {
  return std::is_sorted(pts.begin(), pts.end(),
                        [](const Point& a, const Point& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("pbd_test_" + name);
  fs::remove_all(p);
  return p;
}

double local_median(const GrayImage& img, int cx, int cy, int r) {
  std::vector<int> v;
  for (int y = cy - r; y <= cy + r; ++y)
    for (int x = cx - r; x <= cx + r; ++x)
      if (img.contains(x, y)) v.push_back(img(x, y));
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("scene invariants over 1000 seeds") {
  const RenderConfig cfg = RenderConfig::desk();
  std::array<int, 8> seen{};
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const BatteryScene s = sample_scene(seed, cfg);
    REQUIRE(sorted_by_x(s.anode));
    REQUIRE(sorted_by_x(s.cathode));
    for (auto a : s.attributes.to_vector()) ++seen[static_cast<int>(a)];
    for (const auto& p : s.anode) REQUIRE((p.x >= 0 && p.x < s.width && p.y >= 0 && p.y < s.height));
    for (const auto& p : s.cathode) REQUIRE((p.x >= 0 && p.x < s.width && p.y >= 0 && p.y < s.height));
    CHECK(s.split == assign_split(s, cfg.tough_pitch_threshold));
    for (const auto* pts : {&s.anode, &s.cathode}) {
      for (std::size_t j = 1; j < pts->size(); ++j) REQUIRE((*pts)[j].x - (*pts)[j - 1].x >= kMinEndpointGap);
    }
    if (s.attributes.contains(Attribute::A)) continue;
    REQUIRE(s.anode.size() == s.cathode.size() + 1);
    for (std::size_t j = 0; j < s.cathode.size(); ++j) {
      // Exactly one cathode between consecutive anodes, and it overhangs.
      REQUIRE(s.anode[j].x < s.cathode[j].x);
      REQUIRE(s.cathode[j].x < s.anode[j + 1].x);
      REQUIRE(s.cathode[j].y < std::max(s.anode[j].y, s.anode[j + 1].y));
    }
  }
  for (int count : seen) CHECK(count > 0);
}

TEST_CASE("sampling is deterministic") {
  const RenderConfig cfg;
  for (std::uint64_t seed : {1ull, 77ull, 123456789ull}) {
    const BatteryScene a = sample_scene(seed, cfg);
    const BatteryScene b = sample_scene(seed, cfg);
    CHECK(a.anode == b.anode);
    CHECK(a.cathode == b.cathode);
    CHECK(a.attributes == b.attributes);
    CHECK(render(a, cfg) == render(b, cfg));
  }
}

TEST_CASE("forced P scene is pure and regular") {
  const RenderConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BatteryScene s = sample_scene(seed, cfg, AttributeSet{Attribute::P});
    CHECK(s.attributes == AttributeSet{Attribute::P});
    CHECK(s.layout.forks.empty());
    CHECK(s.layout.distractors.empty());
    CHECK_FALSE(s.layout.separator.has_value());
    CHECK(s.anode.size() == s.cathode.size() + 1);
    if (anode_pitch(s) >= cfg.tough_pitch_threshold) CHECK(s.split == Split::Regular);
  }
}

TEST_CASE("forced BI scene has an unannotated fork tip") {
  const RenderConfig cfg;
  int with_forks = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BatteryScene s = sample_scene(seed, cfg, AttributeSet{Attribute::BI});
    if (s.layout.forks.empty()) continue;
    ++with_forks;
    for (const auto& f : s.layout.forks) {
      const Point tip{static_cast<int>(std::lround(f.tip_x)), static_cast<int>(std::lround(f.tip_y))};
      CHECK(std::find(s.anode.begin(), s.anode.end(), tip) == s.anode.end());
      CHECK(std::find(s.cathode.begin(), s.cathode.end(), tip) == s.cathode.end());
    }
  }
  CHECK(with_forks >= 18);
}

TEST_CASE("split assignment") {
  BatteryScene s;
  s.anode = {{10, 80}, {30, 80}, {50, 80}};
  s.attributes = {Attribute::P};
  CHECK(assign_split(s) == Split::Regular);
  s.attributes = {Attribute::BI, Attribute::TRI};
  CHECK(assign_split(s) == Split::Difficult);
  s.attributes = {Attribute::SI};
  CHECK(assign_split(s) == Split::Tough);
  s.attributes = {Attribute::A};
  CHECK(assign_split(s) == Split::Tough);
  s.attributes = {Attribute::T, Attribute::PI, Attribute::TAI};
  CHECK(assign_split(s) == Split::Tough);
  s.attributes = {Attribute::P};
  s.anode = {{10, 80}, {16, 80}, {22, 80}};
  CHECK(assign_split(s) == Split::Tough);
}

TEST_CASE("render: endpoints darker than local background") {
  const RenderConfig cfg;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const BatteryScene s = sample_scene(seed, cfg, AttributeSet{Attribute::P});
    const GrayImage img = render(s, cfg);
    CHECK(img.height == cfg.height);
    for (const auto& p : s.anode) CHECK(img(p.x, p.y) < local_median(img, p.x, p.y, 6));
  }
}

TEST_CASE("render: separator reduces stroke contrast by the configured factor") {
  RenderConfig cfg;
  cfg.noise_sigma = 0;
  cfg.blur_sigma_clear = cfg.blur_sigma_blur = 0;
  const BatteryScene s = sample_scene(3, cfg, AttributeSet{Attribute::SI});
  REQUIRE(s.layout.separator.has_value());
  const GrayImage img = render(s, cfg);
  const auto& r = *s.layout.separator;
  // A band pixel away from every stroke.
  const int by = static_cast<int>(std::ceil(r.y0)) + 1;
  int bx = -1;
  for (int x = static_cast<int>(std::ceil(r.x0)); x < r.x1; ++x) {
    bool clear = true;
    for (const auto& st : s.layout.plates) clear = clear && std::abs(st.endpoint.x - x) > 4;
    if (clear) {
      bx = x;
      break;
    }
  }
  REQUIRE(bx >= 0);
  const double band = img(bx, by);
  const double stroke = cfg.anode_intensity;
  CHECK(std::abs((band - stroke) - cfg.separator_contrast * (cfg.body - stroke)) <= 1.0);
}

TEST_CASE("infeasible config is rejected") {
  RenderConfig cfg;
  cfg.anode_count = {30, 40};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(sample_scene(1, cfg), ConfigError);
  cfg = RenderConfig{};
  cfg.pitch = {10, 5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_NOTHROW(RenderConfig::full_resolution().validate());
}

TEST_CASE("flip_horizontal mirrors and re-sorts") {
  const BatteryScene s = sample_scene(5, RenderConfig{});
  const BatteryScene f = flip_horizontal(s);
  REQUIRE(f.anode.size() == s.anode.size());
  CHECK(sorted_by_x(f.anode));
  CHECK(f.anode.front().x == s.width - 1 - s.anode.back().x);
  CHECK(flip_horizontal(f).anode == s.anode);
}

TEST_CASE("dataset generation is reproducible and consistent") {
  const fs::path a = temp_dir("ds_a");
  const fs::path b = temp_dir("ds_b");
  const RenderConfig cfg;
  const DatasetManifest m = generate_dataset(10, 42, cfg, a);
  generate_dataset(10, 42, cfg, b);
  REQUIRE(m.entries.size() == 10);
  CHECK(m.select(Subset::Train).size() == 6);
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  const DatasetManifest back = read_manifest(a / "manifest.json");
  REQUIRE(back.entries.size() == 10);
  for (const auto& e : back.entries) {
    CHECK(slurp(a / e.image) == slurp(b / e.image));
    CHECK(slurp(a / e.annotation) == slurp(b / e.annotation));
    const BatteryScene s = read_annotation(a / e.annotation);
    CHECK(e.split == assign_split(s, cfg.tough_pitch_threshold));
    const json doc = read_json(a / e.annotation);
    CHECK(doc.at("anode").size() == s.anode.size());
    CHECK(doc.at("cathode").size() == s.cathode.size());
    const GrayImage img = read_pgm(a / e.image);
    CHECK(img.height == cfg.height);
  }
  CHECK_THROWS_AS(generate_dataset(0, 1, cfg, a), ConfigError);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("annotation round trip") {
  const BatteryScene s = sample_scene(9, RenderConfig{});
  const BatteryScene r = scene_from_json(scene_to_json(s));
  CHECK(r.anode == s.anode);
  CHECK(r.cathode == s.cathode);
  CHECK(r.attributes == s.attributes);
  CHECK(r.seed == s.seed);
  CHECK(r.split == s.split);
  CHECK_THROWS_AS(scene_from_json(json{{"seed", 1}}), DataError);
}
