#include "posefuse/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "posefuse/error.hpp"

namespace posefuse::nn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_size(shape_)) {
    throw ShapeMismatch("tensor of shape " + shape_string(shape_) + " given " +
                        std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != values_.size()) {
    throw ShapeMismatch("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), values_);
}

void Tensor::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

std::size_t Tensor::sample_size() const { return shape_.empty() || shape_[0] == 0 ? 0 : size() / shape_[0]; }

Tensor Tensor::slice_batch(std::size_t begin, std::size_t end) const {
  const std::size_t per = sample_size();
  Shape shape = shape_;
  shape[0] = end - begin;
  return Tensor(std::move(shape),
                std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(begin * per),
                                    values_.begin() + static_cast<std::ptrdiff_t>(end * per)));
}

Eigen::Map<Tensor::RowMatrix> Tensor::matrix(std::size_t rows, std::size_t cols) {
  return {values_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Eigen::Map<const Tensor::RowMatrix> Tensor::matrix(std::size_t rows, std::size_t cols) const {
  return {values_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor stack(std::span<const Tensor> samples) {
  if (samples.empty()) return {};
  Shape shape{samples.size()};
  const Shape& inner = samples.front().shape();
  shape.insert(shape.end(), inner.begin(), inner.end());
  std::vector<double> values;
  values.reserve(shape_size(shape));
  for (const Tensor& s : samples) {
    if (s.shape() != inner) throw ShapeMismatch("stack: inconsistent sample shapes");
    values.insert(values.end(), s.values().begin(), s.values().end());
  }
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace posefuse::nn
