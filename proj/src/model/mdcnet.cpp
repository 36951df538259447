// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/model/mdcnet.hpp"

#include <cmath>
#include <string>

#include "pbd/error.hpp"
#include "pbd/model/losses.hpp"
#include "pbd/random.hpp"

namespace pbd::model {

using nn::Conv2dOptions;
using nn::Resample;
using nn::Shape;
using nn::Tensor;

namespace {
constexpr double kCountBiasInit = 1.0;
constexpr double kHeadGain = 0.1;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) h = (h ^ ch) * 0x100000001b3ULL;
  return h;
}
}  // namespace

ConvParams Mdcnet::make_conv(const std::string& name, int cout, int cin, int k, bool bias, double gain) {
  ConvParams p;
  p.w = params_.add(name + ".w", Shape{cout, cin, k, k});
  Rng rng(mix_seed(init_state_ ^ fnv1a(name)));
  const double std_dev = gain * std::sqrt(2.0 / (static_cast<double>(cin) * k * k));
  for (double& v : p.w.mutable_data()) v = std_dev * rng.normal();
  if (bias) p.b = params_.add(name + ".b", Shape{1, cout, 1, 1});
  return p;
}

Mdcnet::Mdcnet(const ModelConfig& cfg) : cfg_(cfg), init_state_(mix_seed(cfg.seed ^ 0x6d6463ULL)) {
  cfg_.validate();
  const auto& ew = cfg_.encoder_widths;
  const auto& dw = cfg_.decoder_widths;

  for (int l = 0; l < 5; ++l) {
    const std::string prefix = "enc.l" + std::to_string(l + 1);
    encoder_[l].down = make_conv(prefix + ".down", ew[l], l == 0 ? 1 : ew[l - 1], 3);
    for (int b = 0; b < cfg_.blocks_per_level; ++b) {
      const std::string bp = prefix + ".block" + std::to_string(b);
      // Second conv starts small so each block begins close to identity.
      encoder_[l].blocks.push_back(Block{make_conv(bp + ".c1", ew[l], ew[l], 3), make_conv(bp + ".c2", ew[l], ew[l], 3, true, kHeadGain)});
    }
  }

  for (std::size_t i = 0; i < cfg_.dilations.size(); ++i) {
    ms_branches_.push_back(make_conv("ms.branch" + std::to_string(i), ew[4], ew[4], 3));
  }
  ms_pool_ = make_conv("ms.pool", ew[4], ew[4], 1);
  ms_proj_ = make_conv("ms.proj", ew[4], ew[4] * static_cast<int>(cfg_.dilations.size() + 1), 1);

  if (cfg_.use_pfm) {
    for (int i = 0; i < 3; ++i) {
      const int c = ew[i + 2];
      const std::string prefix = "pfm.l" + std::to_string(i + 3);
      pfm_att_[i] = make_conv(prefix + ".att", c, c, 1);
      // Attention weights average 1/C, so the bank is initialised C times
      // larger to give the effective kernel a He-scaled start.
      pfm_kernel_[i] = make_conv(prefix + ".kernel", c, c, cfg_.pfm_kernel, false, static_cast<double>(c)).w;
      fuse_[i] = make_conv("pfm.fuse" + std::to_string(i + 3), c, c, 3);
    }
    fuse_up_[0] = make_conv("pfm.up5", ew[3], ew[4], 3);
    fuse_up_[1] = make_conv("pfm.up4", ew[2], ew[3], 3);
  }

  dec_[4] = make_conv("dec.l5", dw[4], ew[4], 3);
  for (int l = 3; l >= 0; --l) {
    lateral_[l] = make_conv("dec.lateral" + std::to_string(l + 1), dw[l + 1], ew[l], 1);
    dec_[l] = make_conv("dec.l" + std::to_string(l + 1), dw[l], dw[l + 1], 3);
  }
  point_head_ = make_conv("point.head", 2, dw[0], 1, true, kHeadGain);

  if (cfg_.use_count) {
    for (int p = 0; p < 2; ++p) {
      count_[p] = make_conv(p == 0 ? "count.anode" : "count.cathode", 1, ew[4], 1);
      count_[p].b.mutable_data()[0] = kCountBiasInit;
    }
  }
  if (cfg_.use_line) {
    low_proj_ = make_conv("line.proj2", ew[0], ew[1], 1);
    low_mix_ = make_conv("line.fuse12", ew[0], ew[0], 3);
    line_mix_ = make_conv("line.mask_conv", ew[0], ew[0], 3);
    line_out_[0] = make_conv("line.head_anode", 1, ew[0], 1, true, kHeadGain);
    line_out_[1] = make_conv("line.head_cathode", 1, ew[0], 1, true, kHeadGain);
  }
}

Tensor Mdcnet::conv(const Tensor& x, const ConvParams& p, Conv2dOptions opts) const {
  Tensor y = nn::conv2d(x, p.w, opts);
  return p.b.defined() ? nn::add(y, p.b) : y;
}

namespace {
Conv2dOptions same(int k, int dilation = 1) { return Conv2dOptions{1, dilation * (k / 2), dilation}; }
}  // namespace

EncoderFeatures Mdcnet::encode(const Tensor& image) const {
  const Shape s = image.shape();
  if (s.c != 1 || s.h != s.w || s.h % 32 != 0 || s.h == 0) {
    throw DimensionError("encoder expects (N, 1, S, S) with S a multiple of 32, got " + s.str());
  }
  EncoderFeatures out;
  Tensor x = image;
  for (int l = 0; l < 5; ++l) {
    x = nn::relu(conv(x, encoder_[l].down, Conv2dOptions{2, 1, 1}));
    for (const auto& b : encoder_[l].blocks) {
      Tensor r = nn::relu(conv(x, b.c1, same(3)));
      x = nn::relu(nn::add(x, conv(r, b.c2, same(3))));
    }
    out[l] = x;
  }
  return out;
}

PromptFeatures Mdcnet::encode_prompt(const Tensor& prompt_image) const {
  const EncoderFeatures f = encode(prompt_image);
  return PromptFeatures{{f[2], f[3], f[4]}};
}

Tensor Mdcnet::multi_scale(const Tensor& f5) const {
  const Shape s = f5.shape();
  std::vector<Tensor> branches;
  for (std::size_t i = 0; i < ms_branches_.size(); ++i) {
    branches.push_back(nn::relu(conv(f5, ms_branches_[i], same(3, cfg_.dilations[i]))));
  }
  Tensor pooled = nn::relu(conv(nn::global_avg_pool(f5), ms_pool_));
  branches.push_back(nn::resample(pooled, s.h, s.w, Resample::BilinearUp));
  return nn::relu(conv(nn::concat_channels(branches), ms_proj_));
}

void Mdcnet::check_level(int level) const {
  if (level < 3 || level > 5) throw ContractError("prompt filter level must be 3, 4 or 5, got " + std::to_string(level));
  if (!cfg_.use_pfm) throw ContractError("prompt filter disabled in this model");
}

Tensor Mdcnet::effective_kernel(int level, const Tensor& prompt_feature) const {
  check_level(level);
  const int i = level - 3;
  const int c = cfg_.encoder_widths[i + 2];
  if (prompt_feature.shape().c != c) {
    throw ContractError("prompt feature at level " + std::to_string(level) + " has " +
                        std::to_string(prompt_feature.shape().c) + " channels, expected " + std::to_string(c));
  }
  if (prompt_feature.shape().n != 1) throw ContractError("prompt batch must be 1, got " + prompt_feature.shape().str());
  Tensor attention = nn::softmax_channels(conv(nn::global_avg_pool(prompt_feature), pfm_att_[i]));
  return nn::mul(pfm_kernel_[i], attention);
}

Tensor Mdcnet::prompt_filter(int level, const Tensor& prompt_feature, const Tensor& current_feature) const {
  check_level(level);
  const int c = cfg_.encoder_widths[level - 1];
  if (current_feature.shape().c != c) {
    throw ContractError("current feature at level " + std::to_string(level) + " has " +
                        std::to_string(current_feature.shape().c) + " channels, expected " + std::to_string(c));
  }
  return nn::conv2d(current_feature, effective_kernel(level, prompt_feature), same(cfg_.pfm_kernel));
}

Tensor Mdcnet::decode_points(const EncoderFeatures& skips, int out_size) const {
  Tensor d = nn::relu(conv(skips[4], dec_[4], same(3)));
  for (int l = 3; l >= 0; --l) {
    const Shape s = skips[l].shape();
    Tensor up = nn::resample(d, s.h, s.w, Resample::BilinearUp);
    d = nn::relu(conv(nn::add(conv(skips[l], lateral_[l]), up), dec_[l], same(3)));
  }
  Tensor logits = conv(d, point_head_);
  return nn::resample(logits, out_size, out_size, Resample::BilinearUp);
}

Tensor Mdcnet::count_head(int polarity, const Tensor& f5, const Tensor& point_map) const {
  if (!cfg_.use_count) throw ContractError("counting head disabled in this model");
  const Shape fs = f5.shape();
  Tensor masked;
  if (cfg_.count_downsample_mask) {
    masked = nn::mul(f5, nn::resample(point_map, fs.h, fs.w, Resample::AvgDown));
  } else {
    const Shape ms = point_map.shape();
    masked = nn::mul(nn::resample(f5, ms.h, ms.w, Resample::BilinearUp), point_map);
  }
  return nn::relu(conv(nn::global_avg_pool(masked), count_[polarity]));
}

Tensor Mdcnet::fuse_low_level(const Tensor& f1, const Tensor& f2) const {
  if (!cfg_.use_line) throw ContractError("line head disabled in this model");
  const Shape s = f1.shape();
  Tensor up = nn::resample(conv(f2, low_proj_), s.h, s.w, Resample::BilinearUp);
  return conv(nn::add(f1, up), low_mix_, same(3));
}

Tensor Mdcnet::line_head(int polarity, const Tensor& f12, const Tensor& point_map) const {
  if (!cfg_.use_line) throw ContractError("line head disabled in this model");
  const Shape s = f12.shape();
  Tensor mask = nn::resample(point_map, s.h, s.w, Resample::AvgDown);
  Tensor residual = nn::add(conv(nn::mul(mask, f12), line_mix_, same(3)), f12);
  const Shape ms = point_map.shape();
  return nn::resample(conv(residual, line_out_[polarity]), ms.h, ms.w, Resample::BilinearUp);
}

ForwardOutputs Mdcnet::forward(const Tensor& image, const PromptFeatures& prompt) const {
  const EncoderFeatures enc = encode(image);
  EncoderFeatures skips = enc;
  skips[4] = multi_scale(enc[4]);
  if (cfg_.use_pfm) {
    std::array<Tensor, 3> filtered;
    for (int i = 0; i < 3; ++i) filtered[i] = prompt_filter(i + 3, prompt.levels[i], skips[i + 2]);
    Tensor g = nn::relu(conv(filtered[2], fuse_[2], same(3)));
    skips[4] = g;
    for (int i = 1; i >= 0; --i) {
      const Shape s = filtered[i].shape();
      Tensor up = nn::resample(conv(g, fuse_up_[1 - i], same(3)), s.h, s.w, Resample::BilinearUp);
      g = nn::relu(conv(nn::add(filtered[i], up), fuse_[i], same(3)));
      skips[i + 2] = g;
    }
  }

  ForwardOutputs out;
  out.point_logits = decode_points(skips, image.shape().h);
  out.point = nn::sigmoid(out.point_logits);
  const Tensor guide = cfg_.guidance_grad ? out.point : nn::detach(out.point);
  const Tensor map_a = nn::slice_channels(guide, 0, 1);
  const Tensor map_c = nn::slice_channels(guide, 1, 1);
  if (cfg_.use_count) {
    out.count_a = count_head(0, enc[4], map_a);
    out.count_c = count_head(1, enc[4], map_c);
  }
  if (cfg_.use_line) {
    const Tensor f12 = fuse_low_level(enc[0], enc[1]);
    out.line_logits_a = line_head(0, f12, map_a);
    out.line_logits_c = line_head(1, f12, map_c);
    out.line_a = nn::sigmoid(out.line_logits_a);
    out.line_c = nn::sigmoid(out.line_logits_c);
  }
  return out;
}

ForwardOutputs Mdcnet::forward(const Tensor& image, const Tensor& prompt_image) const {
  return forward(image, encode_prompt(prompt_image));
}

LossTerms loss_total(const ForwardOutputs& out, const TargetBatch& target, const ModelConfig& cfg) {
  const int k = cfg.effective_weight_kernel();
  LossTerms t;
  t.point = nn::add(structure_loss(nn::slice_channels(out.point_logits, 0, 1), nn::slice_channels(target.point, 0, 1), k),
                    structure_loss(nn::slice_channels(out.point_logits, 1, 1), nn::slice_channels(target.point, 1, 1), k));
  t.total = nn::scale(t.point, cfg.lambda_point);
  if (out.line_logits_a.defined()) {
    t.line = nn::add(structure_loss(out.line_logits_a, target.line_a, k), structure_loss(out.line_logits_c, target.line_c, k));
    t.total = nn::add(t.total, nn::scale(t.line, cfg.lambda_line));
  } else {
    t.line = Tensor::scalar(0.0);
  }
  if (out.count_a.defined()) {
    t.count = nn::add(l1_loss(out.count_a, target.count_a), l1_loss(out.count_c, target.count_c));
    t.total = nn::add(t.total, nn::scale(t.count, cfg.lambda_count));
  } else {
    t.count = Tensor::scalar(0.0);
  }
  return t;
}

}  // namespace pbd::model
