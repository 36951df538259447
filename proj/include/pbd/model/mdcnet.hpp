// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "pbd/model/config.hpp"
#include "pbd/nn/ops.hpp"
#include "pbd/nn/optim.hpp"

namespace pbd::model {

struct ConvParams {
  nn::Tensor w;
  nn::Tensor b;  // (1, C_out, 1, 1); undefined for bias-free layers
};

using EncoderFeatures = std::array<nn::Tensor, 5>;

/// Prompt features at levels 3-5 (indices 0..2).
struct PromptFeatures {
  std::array<nn::Tensor, 3> levels;
};

struct ForwardOutputs {
  nn::Tensor point_logits;  // (N, 2, H, W): anode, cathode
  nn::Tensor point;         // sigmoid of point_logits
  nn::Tensor line_logits_a;  // (N, 1, H, W); undefined without the line head
  nn::Tensor line_logits_c;
  nn::Tensor line_a;
  nn::Tensor line_c;
  nn::Tensor count_a;  // (N, 1, 1, 1); undefined without the counting head
  nn::Tensor count_c;
};

/// Supervision for one batch, matching ForwardOutputs shapes.
struct TargetBatch {
  nn::Tensor point;   // (N, 2, H, W)
  nn::Tensor line_a;  // (N, 1, H, W)
  nn::Tensor line_c;
  nn::Tensor count_a;  // (N, 1, 1, 1)
  nn::Tensor count_c;
};

struct LossTerms {
  nn::Tensor point;
  nn::Tensor line;
  nn::Tensor count;
  nn::Tensor total;
};

class Mdcnet {
 public:
  explicit Mdcnet(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  /// Shared encoder. `image` is (N, 1, S, S), standardised per image, S a multiple of 32.
  EncoderFeatures encode(const nn::Tensor& image) const;
  PromptFeatures encode_prompt(const nn::Tensor& prompt_image) const;

  nn::Tensor multi_scale(const nn::Tensor& f5) const;

  /// K_l scaled along its input-channel axis by softmax(conv1x1(GAP(prompt))).
  nn::Tensor effective_kernel(int level, const nn::Tensor& prompt_feature) const;
  nn::Tensor prompt_filter(int level, const nn::Tensor& prompt_feature, const nn::Tensor& current_feature) const;

  /// Point logits (N, 2, S, S) from the five skip tensors (levels 1..5).
  nn::Tensor decode_points(const EncoderFeatures& skips, int out_size) const;

  /// Counting head for one polarity (0 anode, 1 cathode): relu(conv1x1(GAP(f5 * point map))).
  nn::Tensor count_head(int polarity, const nn::Tensor& f5, const nn::Tensor& point_map) const;

  /// Residual line head; returns logits at the point-map resolution.
  nn::Tensor line_head(int polarity, const nn::Tensor& f12, const nn::Tensor& point_map) const;
  nn::Tensor fuse_low_level(const nn::Tensor& f1, const nn::Tensor& f2) const;

  ForwardOutputs forward(const nn::Tensor& image, const PromptFeatures& prompt) const;
  /// Encodes the prompt on the current tape, so gradients reach the encoder
  /// through both paths.
  ForwardOutputs forward(const nn::Tensor& image, const nn::Tensor& prompt_image) const;

 private:
  struct Block {
    ConvParams c1;
    ConvParams c2;
  };
  struct Level {
    ConvParams down;  // stem for level 1
    std::vector<Block> blocks;
  };

  ConvParams make_conv(const std::string& name, int cout, int cin, int k, bool bias = true, double gain = 1.0);
  nn::Tensor conv(const nn::Tensor& x, const ConvParams& p, nn::Conv2dOptions opts = {}) const;
  void check_level(int level) const;

  ModelConfig cfg_;
  nn::ParameterStore params_;
  std::uint64_t init_state_;

  std::array<Level, 5> encoder_;
  std::vector<ConvParams> ms_branches_;
  ConvParams ms_pool_;
  ConvParams ms_proj_;
  std::array<ConvParams, 3> pfm_att_;
  std::array<nn::Tensor, 3> pfm_kernel_;
  std::array<ConvParams, 3> fuse_;  // levels 3, 4, 5
  std::array<ConvParams, 2> fuse_up_;  // 5 -> 4, 4 -> 3
  std::array<ConvParams, 5> dec_;
  std::array<ConvParams, 4> lateral_;  // levels 1..4
  ConvParams point_head_;
  std::array<ConvParams, 2> count_;
  ConvParams low_proj_;
  ConvParams low_mix_;
  ConvParams line_mix_;
  std::array<ConvParams, 2> line_out_;
};

LossTerms loss_total(const ForwardOutputs& out, const TargetBatch& target, const ModelConfig& cfg);

}  // namespace pbd::model
