#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace posefuse::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. Axis 0 is the batch axis for
/// activations: (batch, channels, height, width) or (batch, features).
class Tensor {
 public:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Reinterprets the buffer; the element count must be unchanged.
  Tensor reshaped(Shape shape) const;
  void fill(double value);

  /// Rows [begin, end) along axis 0.
  Tensor slice_batch(std::size_t begin, std::size_t end) const;
  /// Per-sample element count (product of all axes but the first).
  std::size_t sample_size() const;

  /// View as a matrix with `rows` rows.
  Eigen::Map<RowMatrix> matrix(std::size_t rows, std::size_t cols);
  Eigen::Map<const RowMatrix> matrix(std::size_t rows, std::size_t cols) const;

  bool all_finite() const;
  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// Stacks per-sample tensors (all of equal shape) along a new batch axis.
Tensor stack(std::span<const Tensor> samples);

}  // namespace posefuse::nn
