// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/model/config.hpp"

#include <cmath>
#include <set>
#include <string>

#include "pbd/error.hpp"

namespace pbd::model {

void ModelConfig::validate() const {
  if (input_size < 32 || input_size % 32 != 0) {
    throw ConfigError("input_size must be a positive multiple of 32, got " + std::to_string(input_size));
  }
  for (int w : encoder_widths) {
    if (w < 1) throw ConfigError("encoder widths must be >= 1");
  }
  for (int w : decoder_widths) {
    if (w < 1) throw ConfigError("decoder widths must be >= 1");
  }
  if (dilations.empty()) throw ConfigError("dilation list must not be empty");
  for (int d : dilations) {
    if (d < 1) throw ConfigError("dilations must be >= 1");
  }
  if (pfm_kernel < 1 || pfm_kernel % 2 == 0) throw ConfigError("pfm_kernel must be odd and >= 1");
  if (blocks_per_level < 0) throw ConfigError("blocks_per_level must be >= 0");
  if (lambda_point < 0 || lambda_line < 0 || lambda_count < 0) throw ConfigError("loss weights must be >= 0");
  if (weight_kernel < 0 || (weight_kernel > 0 && weight_kernel % 2 == 0)) {
    throw ConfigError("weight_kernel must be 0 (auto) or odd");
  }
  if (!(lr > 0)) throw ConfigError("lr must be > 0");
  if (decay_step < 1) throw ConfigError("decay_step must be >= 1");
  if (!(decay_rate > 0 && decay_rate <= 1)) throw ConfigError("decay_rate must lie in (0, 1]");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

int ModelConfig::effective_weight_kernel() const {
  if (weight_kernel > 0) return weight_kernel;
  int k = static_cast<int>(std::lround(31.0 * input_size / 352.0));
  if (k % 2 == 0) ++k;
  return std::max(3, k);
}

ModelConfig ModelConfig::tiny() {
  ModelConfig cfg;
  cfg.input_size = 32;
  cfg.encoder_widths = {2, 3, 3, 4, 4};
  cfg.decoder_widths = {2, 2, 3, 3, 3};
  cfg.dilations = {1, 2};
  cfg.weight_kernel = 3;
  return cfg;
}

ModelConfig ModelConfig::full_resolution() {
  ModelConfig cfg;
  cfg.input_size = 352;
  cfg.encoder_widths = {64, 256, 512, 1024, 2048};
  cfg.decoder_widths = {64, 64, 64, 64, 64};
  cfg.weight_kernel = 31;
  cfg.lr = 1e-4;
  cfg.batch_size = 8;
  return cfg;
}

json to_json(const ModelConfig& cfg) {
  return json{{"input_size", cfg.input_size},
              {"encoder_widths", cfg.encoder_widths},
              {"decoder_widths", cfg.decoder_widths},
              {"dilations", cfg.dilations},
              {"pfm_kernel", cfg.pfm_kernel},
              {"blocks_per_level", cfg.blocks_per_level},
              {"use_pfm", cfg.use_pfm},
              {"use_count", cfg.use_count},
              {"use_line", cfg.use_line},
              {"count_downsample_mask", cfg.count_downsample_mask},
              {"guidance_grad", cfg.guidance_grad},
              {"lambda_point", cfg.lambda_point},
              {"lambda_line", cfg.lambda_line},
              {"lambda_count", cfg.lambda_count},
              {"weight_kernel", cfg.weight_kernel},
              {"lr", cfg.lr},
              {"decay_step", cfg.decay_step},
              {"decay_rate", cfg.decay_rate},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"flip", cfg.flip},
              {"seed", cfg.seed}};
}

ModelConfig model_config_from_json(const json& doc, ModelConfig cfg) {
  if (!doc.is_object()) throw ConfigError("model config must be a JSON object");
  const json known = to_json(cfg);
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw ConfigError("unknown model config field: " + key);
  }
  try {
    auto get = [&doc](const char* key, auto& field) {
      if (doc.contains(key)) doc.at(key).get_to(field);
    };
    get("input_size", cfg.input_size);
    get("encoder_widths", cfg.encoder_widths);
    get("decoder_widths", cfg.decoder_widths);
    get("dilations", cfg.dilations);
    get("pfm_kernel", cfg.pfm_kernel);
    get("blocks_per_level", cfg.blocks_per_level);
    get("use_pfm", cfg.use_pfm);
    get("use_count", cfg.use_count);
    get("use_line", cfg.use_line);
    get("count_downsample_mask", cfg.count_downsample_mask);
    get("guidance_grad", cfg.guidance_grad);
    get("lambda_point", cfg.lambda_point);
    get("lambda_line", cfg.lambda_line);
    get("lambda_count", cfg.lambda_count);
    get("weight_kernel", cfg.weight_kernel);
    get("lr", cfg.lr);
    get("decay_step", cfg.decay_step);
    get("decay_rate", cfg.decay_rate);
    get("epochs", cfg.epochs);
    get("batch_size", cfg.batch_size);
    get("flip", cfg.flip);
    get("seed", cfg.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace pbd::model
