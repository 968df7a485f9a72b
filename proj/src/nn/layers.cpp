#include "posefuse/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "posefuse/error.hpp"

namespace posefuse::nn {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* who) {
  if (t.rank() != rank) {
    throw ShapeMismatch(std::string(who) + ": expected rank " + std::to_string(rank) + " input, got " +
                        shape_string(t.shape()));
  }
}

void require_cache(bool present, const char* who) {
  if (!present) throw std::logic_error(std::string(who) + ": backward without forward_train");
}

void he_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& v : t.values()) v = rng.uniform(-limit, limit);
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
               std::size_t padding)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      weights_({out_channels, in_channels, kernel, kernel}),
      bias_({out_channels}),
      grad_weights_({out_channels, in_channels, kernel, kernel}),
      grad_bias_({out_channels}) {}

void Conv2d::initialize(Rng& rng) {
  he_uniform(weights_, in_channels_ * kernel_ * kernel_, rng);
  bias_.fill(0.0);
}

Shape Conv2d::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[0] != in_channels_) {
    throw ShapeMismatch("conv2d: expected (" + std::to_string(in_channels_) + ", H, W), got " +
                        shape_string(input));
  }
  const std::size_t oh = (input[1] + 2 * padding_ - kernel_) / stride_ + 1;
  const std::size_t ow = (input[2] + 2 * padding_ - kernel_) / stride_ + 1;
  return {out_channels_, oh, ow};
}

Tensor Conv2d::run(const Tensor& input, std::vector<Tensor::RowMatrix>* columns) const {
  require_rank(input, 4, "conv2d");
  const Shape out_shape = output_shape({input.dim(1), input.dim(2), input.dim(3)});
  const std::size_t n = input.dim(0), h = input.dim(2), w = input.dim(3);
  const std::size_t oh = out_shape[1], ow = out_shape[2];
  const std::size_t patch = in_channels_ * kernel_ * kernel_;
  const std::size_t spatial = oh * ow;

  Tensor out({n, out_channels_, oh, ow});
  const auto weight = weights_.matrix(out_channels_, patch);
  const Eigen::Map<const Eigen::VectorXd> bias(bias_.data(), static_cast<Eigen::Index>(out_channels_));
  if (columns) columns->assign(n, Tensor::RowMatrix());

  Tensor::RowMatrix cols(patch, spatial);
  for (std::size_t s = 0; s < n; ++s) {
    const double* in = input.data() + s * in_channels_ * h * w;
    for (std::size_t c = 0; c < in_channels_; ++c) {
      for (std::size_t ki = 0; ki < kernel_; ++ki) {
        for (std::size_t kj = 0; kj < kernel_; ++kj) {
          const std::size_t row = (c * kernel_ + ki) * kernel_ + kj;
          for (std::size_t y = 0; y < oh; ++y) {
            const auto iy = static_cast<std::ptrdiff_t>(y * stride_ + ki) - static_cast<std::ptrdiff_t>(padding_);
            for (std::size_t x = 0; x < ow; ++x) {
              const auto ix = static_cast<std::ptrdiff_t>(x * stride_ + kj) - static_cast<std::ptrdiff_t>(padding_);
              const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(h) &&
                                  ix < static_cast<std::ptrdiff_t>(w);
              cols(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(y * ow + x)) =
                  inside ? in[(c * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)] : 0.0;
            }
          }
        }
      }
    }
    Eigen::Map<Tensor::RowMatrix> result(out.data() + s * out_channels_ * spatial,
                                         static_cast<Eigen::Index>(out_channels_),
                                         static_cast<Eigen::Index>(spatial));
    result.noalias() = weight * cols;
    result.colwise() += bias;
    if (columns) (*columns)[s] = cols;
  }
  return out;
}

Tensor Conv2d::infer(const Tensor& input) const { return run(input, nullptr); }

Tensor Conv2d::forward_train(const Tensor& input, Rng&) {
  cached_input_shape_ = input.shape();
  return run(input, &cached_columns_);
}

Tensor Conv2d::backward(const Tensor& grad_output, bool need_input_grad) {
  require_cache(!cached_input_shape_.empty(), "conv2d");
  const std::size_t n = cached_input_shape_[0], h = cached_input_shape_[2], w = cached_input_shape_[3];
  const std::size_t oh = grad_output.dim(2), ow = grad_output.dim(3);
  const std::size_t patch = in_channels_ * kernel_ * kernel_;
  const std::size_t spatial = oh * ow;

  auto grad_weight = grad_weights_.matrix(out_channels_, patch);
  Eigen::Map<Eigen::VectorXd> grad_bias(grad_bias_.data(), static_cast<Eigen::Index>(out_channels_));
  const auto weight = weights_.matrix(out_channels_, patch);

  Tensor grad_input;
  if (need_input_grad) grad_input = Tensor(cached_input_shape_);

  for (std::size_t s = 0; s < n; ++s) {
    const Eigen::Map<const Tensor::RowMatrix> dout(grad_output.data() + s * out_channels_ * spatial,
                                                   static_cast<Eigen::Index>(out_channels_),
                                                   static_cast<Eigen::Index>(spatial));
    grad_weight.noalias() += dout * cached_columns_[s].transpose();
    grad_bias += dout.rowwise().sum();
    if (!need_input_grad) continue;

    const Tensor::RowMatrix dcols = weight.transpose() * dout;
    double* din = grad_input.data() + s * in_channels_ * h * w;
    for (std::size_t c = 0; c < in_channels_; ++c) {
      for (std::size_t ki = 0; ki < kernel_; ++ki) {
        for (std::size_t kj = 0; kj < kernel_; ++kj) {
          const std::size_t row = (c * kernel_ + ki) * kernel_ + kj;
          for (std::size_t y = 0; y < oh; ++y) {
            const auto iy = static_cast<std::ptrdiff_t>(y * stride_ + ki) - static_cast<std::ptrdiff_t>(padding_);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t x = 0; x < ow; ++x) {
              const auto ix = static_cast<std::ptrdiff_t>(x * stride_ + kj) - static_cast<std::ptrdiff_t>(padding_);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              din[(c * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)] +=
                  dcols(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(y * ow + x));
            }
          }
        }
      }
    }
  }
  return grad_input;
}

std::vector<Parameter> Conv2d::parameters() {
  return {{"weight", &weights_, &grad_weights_}, {"bias", &bias_, &grad_bias_}};
}

// ---------------------------------------------------------------- Relu

Tensor Relu::infer(const Tensor& input) const {
  Tensor out = input;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor Relu::forward_train(const Tensor& input, Rng&) {
  cached_input_ = input;
  return infer(input);
}

Tensor Relu::backward(const Tensor& grad_output, bool need_input_grad) {
  require_cache(!cached_input_.empty(), "relu");
  if (!need_input_grad) return {};
  Tensor grad = grad_output;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(cached_input_[i] > 0.0)) grad[i] = 0.0;
  }
  return grad;
}

// ---------------------------------------------------------------- AvgPool2d

AvgPool2d::AvgPool2d(std::size_t window, std::size_t stride) : window_(window), stride_(stride) {
  if (window == 0 || stride == 0) throw std::invalid_argument("avgpool2d: window and stride must be positive");
}

Shape AvgPool2d::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[1] < window_ || input[2] < window_) {
    throw ShapeMismatch("avgpool2d: input " + shape_string(input) + " smaller than window");
  }
  return {input[0], (input[1] - window_) / stride_ + 1, (input[2] - window_) / stride_ + 1};
}

Tensor AvgPool2d::infer(const Tensor& input) const {
  require_rank(input, 4, "avgpool2d");
  const Shape o = output_shape({input.dim(1), input.dim(2), input.dim(3)});
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const double scale = 1.0 / static_cast<double>(window_ * window_);
  Tensor out({n, c, o[1], o[2]});
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const double* in = input.data() + plane * h * w;
    double* dst = out.data() + plane * o[1] * o[2];
    for (std::size_t y = 0; y < o[1]; ++y) {
      for (std::size_t x = 0; x < o[2]; ++x) {
        double acc = 0.0;
        for (std::size_t i = 0; i < window_; ++i) {
          for (std::size_t j = 0; j < window_; ++j) acc += in[(y * stride_ + i) * w + x * stride_ + j];
        }
        dst[y * o[2] + x] = acc * scale;
      }
    }
  }
  return out;
}

Tensor AvgPool2d::forward_train(const Tensor& input, Rng&) {
  cached_input_shape_ = input.shape();
  return infer(input);
}

Tensor AvgPool2d::backward(const Tensor& grad_output, bool need_input_grad) {
  require_cache(!cached_input_shape_.empty(), "avgpool2d");
  if (!need_input_grad) return {};
  const std::size_t n = cached_input_shape_[0], c = cached_input_shape_[1];
  const std::size_t h = cached_input_shape_[2], w = cached_input_shape_[3];
  const std::size_t oh = grad_output.dim(2), ow = grad_output.dim(3);
  const double scale = 1.0 / static_cast<double>(window_ * window_);
  Tensor grad(cached_input_shape_);
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    double* dst = grad.data() + plane * h * w;
    const double* g = grad_output.data() + plane * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const double v = g[y * ow + x] * scale;
        for (std::size_t i = 0; i < window_; ++i) {
          for (std::size_t j = 0; j < window_; ++j) dst[(y * stride_ + i) * w + x * stride_ + j] += v;
        }
      }
    }
  }
  return grad;
}

// ---------------------------------------------------------------- AdaptiveAvgPool2d

AdaptiveAvgPool2d::AdaptiveAvgPool2d(std::size_t out_height, std::size_t out_width)
    : out_height_(out_height), out_width_(out_width) {}

Shape AdaptiveAvgPool2d::output_shape(const Shape& input) const {
  if (input.size() != 3) throw ShapeMismatch("adaptive_avgpool2d: expected (C, H, W), got " + shape_string(input));
  return {input[0], out_height_, out_width_};
}

namespace {

struct Bin {
  std::size_t begin, end;
};

Bin adaptive_bin(std::size_t i, std::size_t in, std::size_t out) {
  return {(i * in) / out, ((i + 1) * in + out - 1) / out};
}

}  // namespace

Tensor AdaptiveAvgPool2d::infer(const Tensor& input) const {
  require_rank(input, 4, "adaptive_avgpool2d");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  Tensor out({n, c, out_height_, out_width_});
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const double* in = input.data() + plane * h * w;
    double* dst = out.data() + plane * out_height_ * out_width_;
    for (std::size_t y = 0; y < out_height_; ++y) {
      const Bin by = adaptive_bin(y, h, out_height_);
      for (std::size_t x = 0; x < out_width_; ++x) {
        const Bin bx = adaptive_bin(x, w, out_width_);
        double acc = 0.0;
        for (std::size_t i = by.begin; i < by.end; ++i) {
          for (std::size_t j = bx.begin; j < bx.end; ++j) acc += in[i * w + j];
        }
        dst[y * out_width_ + x] = acc / static_cast<double>((by.end - by.begin) * (bx.end - bx.begin));
      }
    }
  }
  return out;
}

Tensor AdaptiveAvgPool2d::forward_train(const Tensor& input, Rng&) {
  cached_input_shape_ = input.shape();
  return infer(input);
}

Tensor AdaptiveAvgPool2d::backward(const Tensor& grad_output, bool need_input_grad) {
  require_cache(!cached_input_shape_.empty(), "adaptive_avgpool2d");
  if (!need_input_grad) return {};
  const std::size_t n = cached_input_shape_[0], c = cached_input_shape_[1];
  const std::size_t h = cached_input_shape_[2], w = cached_input_shape_[3];
  Tensor grad(cached_input_shape_);
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    double* dst = grad.data() + plane * h * w;
    const double* g = grad_output.data() + plane * out_height_ * out_width_;
    for (std::size_t y = 0; y < out_height_; ++y) {
      const Bin by = adaptive_bin(y, h, out_height_);
      for (std::size_t x = 0; x < out_width_; ++x) {
        const Bin bx = adaptive_bin(x, w, out_width_);
        const double v =
            g[y * out_width_ + x] / static_cast<double>((by.end - by.begin) * (bx.end - bx.begin));
        for (std::size_t i = by.begin; i < by.end; ++i) {
          for (std::size_t j = bx.begin; j < bx.end; ++j) dst[i * w + j] += v;
        }
      }
    }
  }
  return grad;
}

// ---------------------------------------------------------------- Flatten

Tensor Flatten::infer(const Tensor& input) const {
  if (input.rank() < 2) throw ShapeMismatch("flatten: expected a batch axis");
  return input.reshaped({input.dim(0), input.sample_size()});
}

Tensor Flatten::forward_train(const Tensor& input, Rng&) {
  cached_input_shape_ = input.shape();
  return infer(input);
}

Tensor Flatten::backward(const Tensor& grad_output, bool need_input_grad) {
  require_cache(!cached_input_shape_.empty(), "flatten");
  if (!need_input_grad) return {};
  return grad_output.reshaped(cached_input_shape_);
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::size_t in_features, std::size_t out_features)
    : in_features_(in_features),
      out_features_(out_features),
      weights_({out_features, in_features}),
      bias_({out_features}),
      grad_weights_({out_features, in_features}),
      grad_bias_({out_features}) {}

void Dense::initialize(Rng& rng) {
  he_uniform(weights_, in_features_, rng);
  bias_.fill(0.0);
}

Shape Dense::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] != in_features_) {
    throw ShapeMismatch("dense: expected (" + std::to_string(in_features_) + "), got " + shape_string(input));
  }
  return {out_features_};
}

Tensor Dense::infer(const Tensor& input) const {
  require_rank(input, 2, "dense");
  output_shape({input.dim(1)});
  const std::size_t n = input.dim(0);
  Tensor out({n, out_features_});
  auto y = out.matrix(n, out_features_);
  y.noalias() = input.matrix(n, in_features_) * weights_.matrix(out_features_, in_features_).transpose();
  const Eigen::Map<const Eigen::RowVectorXd> b(bias_.data(), static_cast<Eigen::Index>(out_features_));
  y.rowwise() += b;
  return out;
}

Tensor Dense::forward_train(const Tensor& input, Rng&) {
  cached_input_ = input;
  return infer(input);
}

Tensor Dense::backward(const Tensor& grad_output, bool need_input_grad) {
  require_cache(!cached_input_.empty(), "dense");
  const std::size_t n = cached_input_.dim(0);
  const auto dy = grad_output.matrix(n, out_features_);
  grad_weights_.matrix(out_features_, in_features_).noalias() += dy.transpose() * cached_input_.matrix(n, in_features_);
  Eigen::Map<Eigen::RowVectorXd> db(grad_bias_.data(), static_cast<Eigen::Index>(out_features_));
  db += dy.colwise().sum();
  if (!need_input_grad) return {};
  Tensor grad({n, in_features_});
  grad.matrix(n, in_features_).noalias() = dy * weights_.matrix(out_features_, in_features_);
  return grad;
}

std::vector<Parameter> Dense::parameters() {
  return {{"weight", &weights_, &grad_weights_}, {"bias", &bias_, &grad_bias_}};
}

// ---------------------------------------------------------------- Dropout

Dropout::Dropout(double rate) : rate_(0.0) { set_rate(rate); }

void Dropout::set_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  rate_ = rate;
}

Tensor Dropout::forward_train(const Tensor& input, Rng& rng) {
  mask_ = Tensor(input.shape());
  const double keep_scale = 1.0 / (1.0 - rate_);
  Tensor out = input;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = rng.uniform() < rate_ ? 0.0 : keep_scale;
    mask_[i] = m;
    out[i] *= m;
  }
  return out;
}

Tensor Dropout::backward(const Tensor& grad_output, bool need_input_grad) {
  require_cache(!mask_.empty(), "dropout");
  if (!need_input_grad) return {};
  Tensor grad = grad_output;
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= mask_[i];
  return grad;
}

// ---------------------------------------------------------------- AvgPool1d

AvgPool1d::AvgPool1d(std::size_t window) : window_(window) {
  if (window == 0) throw std::invalid_argument("avgpool1d: window must be positive");
}

Shape AvgPool1d::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] % window_ != 0) {
    throw ShapeMismatch("avgpool1d: feature count " + shape_string(input) + " not divisible by window " +
                        std::to_string(window_));
  }
  return {input[0] / window_};
}

Tensor AvgPool1d::infer(const Tensor& input) const {
  require_rank(input, 2, "avgpool1d");
  const std::size_t n = input.dim(0), f = input.dim(1);
  const std::size_t out_f = output_shape({f})[0];
  Tensor out({n, out_f});
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t j = 0; j < out_f; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < window_; ++k) acc += input[s * f + j * window_ + k];
      out[s * out_f + j] = acc / static_cast<double>(window_);
    }
  }
  return out;
}

Tensor AvgPool1d::forward_train(const Tensor& input, Rng&) {
  cached_input_shape_ = input.shape();
  return infer(input);
}

Tensor AvgPool1d::backward(const Tensor& grad_output, bool need_input_grad) {
  require_cache(!cached_input_shape_.empty(), "avgpool1d");
  if (!need_input_grad) return {};
  const std::size_t n = cached_input_shape_[0], f = cached_input_shape_[1];
  const std::size_t out_f = f / window_;
  Tensor grad(cached_input_shape_);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t j = 0; j < out_f; ++j) {
      const double v = grad_output[s * out_f + j] / static_cast<double>(window_);
      for (std::size_t k = 0; k < window_; ++k) grad[s * f + j * window_ + k] = v;
    }
  }
  return grad;
}

}  // namespace posefuse::nn
