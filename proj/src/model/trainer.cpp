// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#include "pbd/model/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "pbd/error.hpp"
#include "pbd/nn/optim.hpp"
#include "pbd/nn/tape.hpp"
#include "pbd/random.hpp"

namespace pbd::model {

using nn::Shape;
using nn::Tensor;

Tensor image_tensor(const GrayImage& image) { return batch_images({&image}); }

Tensor batch_images(const std::vector<const GrayImage*>& images) {
  if (images.empty()) throw ContractError("batch_images: empty batch");
  const int h = images[0]->height;
  const int w = images[0]->width;
  std::vector<double> values;
  values.reserve(images.size() * static_cast<std::size_t>(h) * w);
  for (const auto* img : images) {
    if (img->height != h || img->width != w) throw DimensionError("batch images differ in size");
    double mean = 0, sq = 0;
    for (auto px : img->pixels) mean += px;
    mean /= static_cast<double>(img->pixels.size());
    for (auto px : img->pixels) sq += (px - mean) * (px - mean);
    const double sd = std::max(1.0, std::sqrt(sq / static_cast<double>(img->pixels.size())));
    for (auto px : img->pixels) values.push_back((px - mean) / sd);
  }
  return Tensor(Shape{static_cast<int>(images.size()), 1, h, w}, std::move(values));
}

LabelTensors label_tensors(const labels::LabelSet& set) {
  LabelTensors t;
  auto append = [](std::vector<double>& dst, const BinaryMask& m) {
    for (auto v : m.pixels) dst.push_back(v ? 1.0 : 0.0);
  };
  append(t.point, set.point.anode);
  append(t.point, set.point.cathode);
  append(t.line_a, set.line.anode);
  append(t.line_c, set.line.cathode);
  t.n_anode = set.n_anode;
  t.n_cathode = set.n_cathode;
  return t;
}

TargetBatch batch_targets(const std::vector<const LabelTensors*>& items, int height, int width) {
  const int n = static_cast<int>(items.size());
  std::vector<double> point, line_a, line_c, count_a, count_c;
  for (const auto* it : items) {
    point.insert(point.end(), it->point.begin(), it->point.end());
    line_a.insert(line_a.end(), it->line_a.begin(), it->line_a.end());
    line_c.insert(line_c.end(), it->line_c.begin(), it->line_c.end());
    count_a.push_back(it->n_anode);
    count_c.push_back(it->n_cathode);
  }
  TargetBatch b;
  b.point = Tensor(Shape{n, 2, height, width}, std::move(point));
  b.line_a = Tensor(Shape{n, 1, height, width}, std::move(line_a));
  b.line_c = Tensor(Shape{n, 1, height, width}, std::move(line_c));
  b.count_a = Tensor(Shape{n, 1, 1, 1}, std::move(count_a));
  b.count_c = Tensor(Shape{n, 1, 1, 1}, std::move(count_c));
  return b;
}

TrainResult train(Mdcnet& model, const std::vector<TrainExample>& data, const GrayImage& prompt,
                  const TrainOptions& opts) {
  const ModelConfig& cfg = model.config();
  if (data.empty()) throw ConfigError("training set is empty");
  opts.labels.validate();
  const int size = cfg.input_size;
  for (const auto& ex : data) {
    if (ex.image.height != size || ex.image.width != size) {
      throw ConfigError("training image is " + std::to_string(ex.image.height) + "x" + std::to_string(ex.image.width) +
                        ", model input_size is " + std::to_string(size));
    }
  }

  // Both orientations are prepared up front; flipping then only picks one.
  std::vector<std::array<GrayImage, 2>> images;
  std::vector<std::array<LabelTensors, 2>> targets;
  for (const auto& ex : data) {
    const auto flipped_scene = synth::flip_horizontal(ex.scene);
    images.push_back({ex.image, flip_horizontal(ex.image)});
    targets.push_back({label_tensors(labels::make_labels(ex.scene, opts.labels, opts.line_thickness)),
                       label_tensors(labels::make_labels(flipped_scene, opts.labels, opts.line_thickness))});
  }
  const Tensor prompt_tensor = image_tensor(prompt);

  if (opts.init_count_bias && cfg.use_count) {
    double mean_a = 0, mean_c = 0;
    for (const auto& t : targets) {
      mean_a += t[0].n_anode;
      mean_c += t[0].n_cathode;
    }
    const double n = static_cast<double>(targets.size());
    for (auto [name, value] : {std::pair{"count.anode.b", mean_a / n}, std::pair{"count.cathode.b", mean_c / n}}) {
      nn::Parameter* p = model.params().find(name);
      if (p == nullptr) throw ContractError(std::string("missing parameter ") + name);
      for (double& v : p->tensor.mutable_data()) v = value;
    }
  }

  nn::Adam adam(model.params(), nn::AdamOptions{cfg.lr, 0.9, 0.999, 1e-8});
  Rng rng(mix_seed(cfg.seed ^ 0x747261696eULL));
  std::vector<std::size_t> order(data.size());
  TrainResult result;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
    }
    const double lr = nn::step_decay_lr(cfg.lr, epoch, cfg.decay_step, cfg.decay_rate);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      if (opts.max_steps && result.steps >= *opts.max_steps) return result;
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const GrayImage*> batch_imgs;
      std::vector<const LabelTensors*> batch_lbls;
      for (std::size_t k = start; k < end; ++k) {
        const int flip = cfg.flip && rng.uniform() < 0.5 ? 1 : 0;
        batch_imgs.push_back(&images[order[k]][flip]);
        batch_lbls.push_back(&targets[order[k]][flip]);
      }

      nn::Tape tape;
      LossTerms loss;
      {
        nn::Tape::Scope scope(tape);
        const ForwardOutputs out = model.forward(batch_images(batch_imgs), prompt_tensor);
        loss = loss_total(out, batch_targets(batch_lbls, size, size), cfg);
      }
      model.params().zero_grad();
      nn::backward(loss.total, tape);
      adam.step(lr);
      ++result.steps;

      TrainLogRow row{epoch, result.steps, loss.point.item(), loss.line.item(), loss.count.item(), lr, loss.total.item()};
      result.log.push_back(row);
      if (opts.on_step && !opts.on_step(row)) return result;
    }
  }
  return result;
}

PromptFeatures prompt_features(const Mdcnet& model, const GrayImage& prompt) {
  return model.encode_prompt(image_tensor(prompt));
}

ForwardOutputs infer(const Mdcnet& model, const GrayImage& image, const PromptFeatures& prompt) {
  return model.forward(image_tensor(image), prompt);
}

void write_train_log_csv(std::ostream& os, const std::vector<TrainLogRow>& log) {
  os << "epoch,step,loss_point,loss_line,loss_count,lr\n";
  char buf[256];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf), "%d,%ld,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.step, r.loss_point, r.loss_line,
                  r.loss_count, r.lr);
    os << buf;
  }
}

}  // namespace pbd::model
