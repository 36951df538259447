// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "pbd/nn/tensor.hpp"

namespace pbd::nn {

/// Ordered record of differentiable operations executed while the tape is
/// active on the current thread. Records are appended in execution order, so
/// the list is topologically sorted by construction.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  struct Record {
    std::string_view op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  /// Makes a tape the recording target for the current thread.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  static Tape* active();

  std::size_t size() const { return records_.size(); }
  const Record& operator[](std::size_t i) const { return records_[i]; }
  void clear() { records_.clear(); }

  /// True when a tape is active and at least one input needs a gradient.
  static bool tracking(std::span<const Tensor> inputs);
  static bool tracking(std::initializer_list<Tensor> inputs) {
    return tracking(std::span<const Tensor>(inputs.begin(), inputs.size()));
  }

  /// Wraps freshly computed values as an operation output. `track` marks it
  /// as a non-leaf that participates in differentiation.
  static Tensor new_result(Shape shape, std::vector<double> values, bool track);

  /// Appends a record to the active tape. No-op when `output` is untracked.
  static void record(std::string_view op, std::vector<Tensor> inputs,
                     const Tensor& output, BackwardFn backward);

  friend void backward(const Tensor& loss, Tape& tape);

 private:
  std::vector<Record> records_;
};

/// Reverse sweep over `tape` seeded with d loss / d loss = 1.
///
/// Gradients of intermediate results are reset on every call; gradients of
/// leaves accumulate until `zero_grad()`.
void backward(const Tensor& loss, Tape& tape);

}  // namespace pbd::nn
