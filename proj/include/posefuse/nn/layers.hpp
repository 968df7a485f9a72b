#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "posefuse/nn/tensor.hpp"
#include "posefuse/util/rng.hpp"

namespace posefuse::nn {

enum class Mode { kTrain, kEval };

/// Non-owning handle on a trainable tensor and its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

/// A differentiable stage. `infer` is the read-only evaluation path and is
/// safe to call concurrently; `forward_train` records whatever `backward`
/// needs and must precede it.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  /// Per-sample output shape (no batch axis) for a per-sample input shape.
  virtual Shape output_shape(const Shape& input) const = 0;

  virtual Tensor infer(const Tensor& input) const = 0;
  virtual Tensor forward_train(const Tensor& input, Rng& rng) = 0;
  /// Accumulates into parameter gradients. Returns dL/d(input), or an empty
  /// tensor when `need_input_grad` is false.
  virtual Tensor backward(const Tensor& grad_output, bool need_input_grad) = 0;

  virtual std::vector<Parameter> parameters() { return {}; }
  virtual std::unique_ptr<Layer> clone() const = 0;
};

/// 2-D convolution with square kernels and symmetric zero padding,
/// lowered to im2col + GEMM per sample.
class Conv2d final : public Layer {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
         std::size_t padding);

  std::string kind() const override { return "conv2d"; }
  Shape output_shape(const Shape& input) const override;
  Tensor infer(const Tensor& input) const override;
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, bool need_input_grad) override;
  std::vector<Parameter> parameters() override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }

  void initialize(Rng& rng);
  Tensor& weights() { return weights_; }
  Tensor& bias() { return bias_; }

 private:
  Tensor run(const Tensor& input, std::vector<Tensor::RowMatrix>* columns) const;

  std::size_t in_channels_, out_channels_, kernel_, stride_, padding_;
  Tensor weights_, bias_, grad_weights_, grad_bias_;
  Shape cached_input_shape_;
  std::vector<Tensor::RowMatrix> cached_columns_;
};

class Relu final : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }

 private:
  Tensor cached_input_;
};

/// Fixed average pooling with a square window.
class AvgPool2d final : public Layer {
 public:
  AvgPool2d(std::size_t window, std::size_t stride);

  std::string kind() const override { return "avgpool2d"; }
  Shape output_shape(const Shape& input) const override;
  Tensor infer(const Tensor& input) const override;
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<AvgPool2d>(*this); }

 private:
  std::size_t window_, stride_;
  Shape cached_input_shape_;
};

/// Average pooling onto a fixed output grid; bin i spans
/// [floor(i*H/out), ceil((i+1)*H/out)).
class AdaptiveAvgPool2d final : public Layer {
 public:
  AdaptiveAvgPool2d(std::size_t out_height, std::size_t out_width);

  std::string kind() const override { return "adaptive_avgpool2d"; }
  Shape output_shape(const Shape& input) const override;
  Tensor infer(const Tensor& input) const override;
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<AdaptiveAvgPool2d>(*this); }

 private:
  std::size_t out_height_, out_width_;
  Shape cached_input_shape_;
};

class Flatten final : public Layer {
 public:
  std::string kind() const override { return "flatten"; }
  Shape output_shape(const Shape& input) const override { return {shape_size(input)}; }
  Tensor infer(const Tensor& input) const override;
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }

 private:
  Shape cached_input_shape_;
};

/// y = x W^T + b with W of shape (out_features, in_features).
class Dense final : public Layer {
 public:
  Dense(std::size_t in_features, std::size_t out_features);

  std::string kind() const override { return "dense"; }
  Shape output_shape(const Shape& input) const override;
  Tensor infer(const Tensor& input) const override;
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, bool need_input_grad) override;
  std::vector<Parameter> parameters() override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

  void initialize(Rng& rng);
  std::size_t in_features() const { return in_features_; }
  std::size_t out_features() const { return out_features_; }
  Tensor& weights() { return weights_; }
  const Tensor& weights() const { return weights_; }
  Tensor& bias() { return bias_; }
  const Tensor& bias() const { return bias_; }

 private:
  std::size_t in_features_, out_features_;
  Tensor weights_, bias_, grad_weights_, grad_bias_;
  Tensor cached_input_;
};

/// Inverted dropout: survivors are scaled by 1/(1-rate) in training,
/// identity at inference.
class Dropout final : public Layer {
 public:
  explicit Dropout(double rate);

  std::string kind() const override { return "dropout"; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor infer(const Tensor& input) const override { return input; }
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }

  double rate() const { return rate_; }
  void set_rate(double rate);
  const Tensor& mask() const { return mask_; }

 private:
  double rate_;
  Tensor mask_;
};

/// Averages consecutive groups of `window` features: (N, F) -> (N, F/window).
class AvgPool1d final : public Layer {
 public:
  explicit AvgPool1d(std::size_t window);

  std::string kind() const override { return "avgpool1d"; }
  Shape output_shape(const Shape& input) const override;
  Tensor infer(const Tensor& input) const override;
  Tensor forward_train(const Tensor& input, Rng& rng) override;
  Tensor backward(const Tensor& grad_output, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<AvgPool1d>(*this); }

  std::size_t window() const { return window_; }

 private:
  std::size_t window_;
  Shape cached_input_shape_;
};

}  // namespace posefuse::nn
