// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pbd/json_io.hpp"

namespace pbd::model {

/// Network, loss and optimisation settings. JSON field names match members.
struct ModelConfig {
  int input_size = 128;
  std::array<int, 5> encoder_widths{16, 32, 64, 96, 128};
  std::array<int, 5> decoder_widths{16, 32, 48, 64, 96};
  std::vector<int> dilations{1, 2, 4, 6};
  int pfm_kernel = 3;
  int blocks_per_level = 1;

  // Component switches for the ablation protocol.
  bool use_pfm = true;
  bool use_count = true;
  bool use_line = true;
  // Counting head masks features with DS(M_p) (true) or DS(F^e5) scaled to
  // the map (false, evaluated at the map resolution).
  bool count_downsample_mask = true;
  // Whether line and counting losses backpropagate into the point map they
  // are guided by. Features shared with the point branch train either way.
  bool guidance_grad = false;

  double lambda_point = 1.0;
  double lambda_line = 1.0;
  double lambda_count = 0.1;
  int weight_kernel = 0;  // 0 = derived from input_size

  double lr = 1e-3;  // from-scratch desk scale; full_resolution() uses 1e-4
  int decay_step = 30;
  double decay_rate = 0.9;
  int epochs = 1;
  int batch_size = 4;
  bool flip = true;
  std::uint64_t seed = 0;

  void validate() const;
  /// Pixel-weight pooling size: 31 at 352 px, scaled with the input and kept odd.
  int effective_weight_kernel() const;

  static ModelConfig tiny();
  static ModelConfig full_resolution();
};

json to_json(const ModelConfig& cfg);
/// Missing fields keep their defaults; unknown fields raise ConfigError.
ModelConfig model_config_from_json(const json& doc, ModelConfig base = {});

}  // namespace pbd::model
