// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pbd/json_io.hpp"
#include "pbd/synth/generator.hpp"

namespace pbd::synth {

enum class Subset { Train, Test };
std::string_view to_string(Subset s);
Subset parse_subset(std::string_view s);

struct ManifestEntry {
  std::string id;
  std::string image;       // relative to the manifest directory
  std::string annotation;  // relative to the manifest directory
  Split split = Split::Regular;
  Subset subset = Subset::Train;
};

struct DatasetManifest {
  std::filesystem::path root;  // directory holding manifest.json
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> select(Subset subset) const;
};

json to_json(const RenderConfig& cfg);
/// Fields absent from `doc` keep their value in `base`; unknown fields throw ConfigError.
RenderConfig render_config_from_json(const json& doc, RenderConfig base = {});

/// Seed of the pure-P reference scene used as the default prompt image.
inline constexpr std::uint64_t kDefaultPromptSeed = 7;
BatteryScene prompt_scene(std::uint64_t seed, const RenderConfig& cfg);

/// Annotation document: seed, shot, attributes, split, image_size, anode, cathode.
json scene_to_json(const BatteryScene& scene);
BatteryScene scene_from_json(const json& doc);

void write_annotation(const std::filesystem::path& path, const BatteryScene& scene);
BatteryScene read_annotation(const std::filesystem::path& path);

/// Per-image seed derived from the dataset seed and the image index.
std::uint64_t scene_seed(std::uint64_t dataset_seed, std::size_t index);

/// Writes images/, annotations/ and manifest.json under `out_dir`.
DatasetManifest generate_dataset(std::size_t n, std::uint64_t seed, const RenderConfig& cfg,
                                 const std::filesystem::path& out_dir);

void write_manifest(const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace pbd::synth
