// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "pbd/labels/labels.hpp"
#include "pbd/model/mdcnet.hpp"
#include "pbd/raster.hpp"
#include "pbd/synth/scene.hpp"

namespace pbd::model {

struct TrainExample {
  GrayImage image;
  synth::BatteryScene scene;
};

struct TrainOptions {
  labels::LabelStrategy labels;
  int line_thickness = labels::kDefaultLineThickness;
  /// Start each counting head's bias at the mean label count of its polarity.
  bool init_count_bias = true;
  /// Stops after this many optimiser steps even mid-epoch.
  std::optional<long> max_steps;
  /// Called after every step with the row just logged; return false to stop.
  std::function<bool(const struct TrainLogRow&)> on_step;
};

struct TrainLogRow {
  int epoch = 0;
  long step = 0;
  double loss_point = 0;
  double loss_line = 0;
  double loss_count = 0;
  double lr = 0;
  double loss_total = 0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  long steps = 0;
};

/// (1, 1, H, W) tensor standardised per image (zero mean, unit variance).
nn::Tensor image_tensor(const GrayImage& image);
nn::Tensor batch_images(const std::vector<const GrayImage*>& images);

struct LabelTensors {
  std::vector<double> point;  // 2 * H * W, anode then cathode
  std::vector<double> line_a;
  std::vector<double> line_c;
  double n_anode = 0;
  double n_cathode = 0;
};
LabelTensors label_tensors(const labels::LabelSet& set);
TargetBatch batch_targets(const std::vector<const LabelTensors*>& items, int height, int width);

/// Adam with per-epoch step decay and random horizontal flips. Deterministic
/// for a fixed `model.config().seed`.
TrainResult train(Mdcnet& model, const std::vector<TrainExample>& data, const GrayImage& prompt,
                  const TrainOptions& opts = {});

/// Inference with a cached prompt; no tape is recorded.
ForwardOutputs infer(const Mdcnet& model, const GrayImage& image, const PromptFeatures& prompt);
PromptFeatures prompt_features(const Mdcnet& model, const GrayImage& prompt);

void write_train_log_csv(std::ostream& os, const std::vector<TrainLogRow>& log);

}  // namespace pbd::model
