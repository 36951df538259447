// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pbd/json_io.hpp"
#include "pbd/labels/labels.hpp"
#include "pbd/model/mdcnet.hpp"
#include "pbd/raster.hpp"
#include "pbd/synth/scene.hpp"

namespace pbd::post {

struct PointD {
  double x = 0;
  double y = 0;
  friend bool operator==(const PointD&, const PointD&) = default;
};

/// Post-processed detections for one image; lists sorted by x then y.
struct PredictionRecord {
  std::string id;
  std::vector<PointD> anode;
  std::vector<PointD> cathode;
  int n_anode = 0;
  int n_cathode = 0;
  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

struct PostprocOptions {
  double threshold = 0.5;
  int min_area = 2;
};

void sort_points(std::vector<PointD>& pts);

/// pixel >= threshold -> 1. Throws ContractError outside [0, 1].
BinaryMask binarize(const FloatImage& map, double threshold);

/// Bounding-box centres of 8-connected components with area >= min_area.
std::vector<PointD> extract_endpoints(const BinaryMask& mask, int min_area = 2);

/// Channel `c` of batch item `n` as an image.
FloatImage channel_image(const nn::Tensor& t, int n, int c);

PredictionRecord masks_to_record(const labels::MaskPair& masks, const std::string& id, int min_area = 2);
PredictionRecord to_record(const model::ForwardOutputs& out, const std::string& id, const PostprocOptions& opts = {},
                           int batch_index = 0);

/// Ground-truth endpoints of a scene in record form.
PredictionRecord scene_record(const synth::BatteryScene& scene, const std::string& id);

/// Grayscale image with anode points in red and cathode points in green.
/// Each point colours its rounded pixel and the four neighbours; with
/// `lines`, consecutive points of a polarity are joined in a darker shade.
RgbImage overlay(const GrayImage& image, const PredictionRecord& record, bool lines = true);

json to_json(const PredictionRecord& r);
PredictionRecord record_from_json(const json& doc);

void write_records_jsonl(const std::filesystem::path& path, const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> read_records_jsonl(const std::filesystem::path& path);

}  // namespace pbd::post
