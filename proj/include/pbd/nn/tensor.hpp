// Copyright (C) 2026 The pbd authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pbd::nn {

/// NCHW extent of a tensor.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  int operator[](int dim) const;
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

class Tape;

namespace detail {
struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated lazily for non-leaf tensors
  bool requires_grad = false;
  bool leaf = true;
};
}  // namespace detail

/// Dense 4-D array of doubles with optional gradient participation.
///
/// Tensor is a handle: copies share storage. Values are treated as immutable
/// once a tensor has been used by an operation; only leaves (parameters,
/// inputs) may be mutated through `mutable_data()`.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);

  bool defined() const { return static_cast<bool>(impl_); }
  const Shape& shape() const;
  std::size_t numel() const { return shape().numel(); }

  std::span<const double> data() const;
  std::span<double> mutable_data();

  /// Marks a leaf as a gradient target and allocates its grad buffer.
  Tensor& set_requires_grad(bool on = true);
  bool requires_grad() const;
  bool is_leaf() const;

  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad() const;
  void zero_grad();

  double item() const;
  double at(int n, int c, int h, int w) const;
  std::size_t offset(int n, int c, int h, int w) const;

  /// Deep copy as a new leaf without gradient.
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  friend class Tape;

  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Toggles the finite-value check applied to every operation output.
void set_check_finite(bool enabled);
bool check_finite_enabled();

/// Throws NumericError if any value is NaN or infinite.
void assert_finite(const Tensor& t, const char* where);

}  // namespace pbd::nn
