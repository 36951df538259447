// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/synth/dataset.hpp"

#include <cmath>
#include <cstdio>

#include "pbd/error.hpp"

namespace pbd::synth {

namespace fs = std::filesystem;

std::string_view to_string(Subset s) { return s == Subset::Train ? "train" : "test"; }

Subset parse_subset(std::string_view s) {
  if (s == "train") return Subset::Train;
  if (s == "test") return Subset::Test;
  throw DataError("unknown subset: " + std::string(s));
}

std::vector<ManifestEntry> DatasetManifest::select(Subset subset) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.subset == subset) out.push_back(e);
  }
  return out;
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Range, lo, hi)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(IntRange, lo, hi)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RenderConfig, height, width, anode_count, pitch, overhang, thickness,
                                                margin, close_scale, long_scale, min_pitch, dense_factor, background,
                                                body, anode_intensity, cathode_intensity, noise_sigma,
                                                blur_sigma_clear, blur_sigma_blur, blur_fraction, tilt_max,
                                                separator_contrast, tray_intensity, tab_intensity, side_reserve,
                                                pure_fraction, max_interference, tough_pitch_threshold,
                                                train_fraction)

json to_json(const RenderConfig& cfg) { return json(cfg); }

RenderConfig render_config_from_json(const json& doc, RenderConfig base) {
  if (!doc.is_object()) throw ConfigError("render config must be a JSON object");
  json merged = json(base);
  for (const auto& [key, value] : doc.items()) {
    if (!merged.contains(key)) throw ConfigError("unknown render config field: " + key);
    merged[key] = value;
  }
  RenderConfig cfg;
  try {
    cfg = merged.get<RenderConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad render config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

BatteryScene prompt_scene(std::uint64_t seed, const RenderConfig& cfg) {
  return sample_scene(seed, cfg, AttributeSet{Attribute::P});
}

namespace {
json points_to_json(const std::vector<Point>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<Point> points_from_json(const json& arr) {
  std::vector<Point> pts;
  for (const auto& p : arr) pts.push_back(Point{p.at(0).get<int>(), p.at(1).get<int>()});
  return pts;
}
}  // namespace

json scene_to_json(const BatteryScene& scene) {
  json doc;
  doc["seed"] = scene.seed;
  doc["shot"] = to_string(scene.shot);
  doc["attributes"] = scene.attributes.names();
  doc["split"] = to_string(scene.split);
  doc["image_size"] = {scene.height, scene.width};
  doc["anode"] = points_to_json(scene.anode);
  doc["cathode"] = points_to_json(scene.cathode);
  return doc;
}

BatteryScene scene_from_json(const json& doc) {
  BatteryScene scene;
  try {
    scene.seed = doc.at("seed").get<std::uint64_t>();
    scene.shot = parse_shot(doc.at("shot").get<std::string>());
    for (const auto& a : doc.at("attributes")) scene.attributes.insert(parse_attribute(a.get<std::string>()));
    scene.split = parse_split(doc.at("split").get<std::string>());
    scene.height = doc.at("image_size").at(0).get<int>();
    scene.width = doc.at("image_size").at(1).get<int>();
    scene.anode = points_from_json(doc.at("anode"));
    scene.cathode = points_from_json(doc.at("cathode"));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed annotation: ") + e.what());
  }
  sort_points(scene.anode);
  sort_points(scene.cathode);
  return scene;
}

void write_annotation(const fs::path& path, const BatteryScene& scene) { write_json(path, scene_to_json(scene)); }

BatteryScene read_annotation(const fs::path& path) {
  try {
    return scene_from_json(read_json(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::uint64_t scene_seed(std::uint64_t dataset_seed, std::size_t index) {
  return mix_seed(dataset_seed ^ static_cast<std::uint64_t>(index));
}

DatasetManifest generate_dataset(std::size_t n, std::uint64_t seed, const RenderConfig& cfg, const fs::path& out_dir) {
  if (n < 1) throw ConfigError("dataset size must be >= 1");
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (!ec) fs::create_directories(out_dir / "annotations", ec);
  if (ec) throw IoError("cannot create dataset directories under " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.root = out_dir;
  const auto n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%05zu", i);
    const BatteryScene scene = sample_scene(scene_seed(seed, i), cfg);
    ManifestEntry entry;
    entry.id = name;
    entry.image = std::string("images/") + name + ".pgm";
    entry.annotation = std::string("annotations/") + name + ".json";
    entry.split = scene.split;
    entry.subset = i < n_train ? Subset::Train : Subset::Test;
    write_pgm(out_dir / entry.image, render(scene, cfg));
    write_annotation(out_dir / entry.annotation, scene);
    manifest.entries.push_back(entry);
  }
  write_manifest(manifest);
  return manifest;
}

void write_manifest(const DatasetManifest& manifest) {
  json arr = json::array();
  for (const auto& e : manifest.entries) {
    arr.push_back({{"id", e.id},
                   {"image", e.image},
                   {"annotation", e.annotation},
                   {"split", to_string(e.split)},
                   {"subset", to_string(e.subset)}});
  }
  write_json(manifest.root / "manifest.json", arr);
}

DatasetManifest read_manifest(const fs::path& path) {
  const json doc = read_json(path);
  DatasetManifest manifest;
  manifest.root = path.parent_path();
  try {
    for (const auto& item : doc) {
      ManifestEntry e;
      e.image = item.at("image").get<std::string>();
      e.annotation = item.at("annotation").get<std::string>();
      e.id = item.contains("id") ? item.at("id").get<std::string>() : fs::path(e.image).stem().string();
      e.split = parse_split(item.at("split").get<std::string>());
      e.subset = item.contains("subset") ? parse_subset(item.at("subset").get<std::string>()) : Subset::Test;
      manifest.entries.push_back(e);
    }
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + path.string() + ": " + e.what());
  }
  return manifest;
}

}  // namespace pbd::synth
