#include "posefuse/nn/model.hpp"

#include <cmath>
#include <stdexcept>

#include "posefuse/error.hpp"

namespace posefuse::nn {

std::string to_string(Lineage lineage) {
  switch (lineage) {
    case Lineage::kUnimodal: return "unimodal";
    case Lineage::kAdditiveSewn: return "AEF";
    case Lineage::kMultiplicativeSewn: return "MEF";
  }
  return "unimodal";
}

Lineage lineage_from_string(std::string_view text) {
  if (text == "unimodal") return Lineage::kUnimodal;
  if (text == "AEF") return Lineage::kAdditiveSewn;
  if (text == "MEF") return Lineage::kMultiplicativeSewn;
  throw Error("unknown lineage '" + std::string(text) + "'");
}

BackboneSpec BackboneSpec::standin_a() {
  BackboneSpec spec;
  spec.id = "A";
  spec.conv_channels = {8, 16, 32};
  return spec;
}

BackboneSpec BackboneSpec::standin_b() {
  BackboneSpec spec;
  spec.id = "B";
  spec.conv_channels = {8, 16, 24, 32};
  return spec;
}

BackboneSpec BackboneSpec::by_id(std::string_view id) {
  if (id == "A") return standin_a();
  if (id == "B") return standin_b();
  throw Error("unknown backbone '" + std::string(id) + "' (expected A or B)");
}

PoseNetModel PoseNetModel::build(const BackboneSpec& backbone, const HeadSpec& head, std::uint64_t seed) {
  if (backbone.conv_channels.empty()) throw ShapeMismatch("backbone needs at least one conv block");
  if (backbone.feature_dim % head.pool_window != 0) {
    throw ShapeMismatch("feature_dim must be divisible by the head pooling window");
  }

  PoseNetModel model;
  model.backbone_ = backbone;
  model.head_ = head;
  auto add = [&model](std::string name, std::unique_ptr<Layer> layer) {
    model.layers_.push_back({std::move(name), std::move(layer)});
  };

  add("stem_pool", std::make_unique<AvgPool2d>(backbone.stem_pool, backbone.stem_pool));
  std::size_t channels = backbone.input_channels;
  for (std::size_t i = 0; i < backbone.conv_channels.size(); ++i) {
    const std::size_t out = backbone.conv_channels[i];
    add("conv" + std::to_string(i),
        std::make_unique<Conv2d>(channels, out, backbone.kernel, backbone.stride, backbone.kernel / 2));
    add("relu" + std::to_string(i), std::make_unique<Relu>());
    channels = out;
  }
  add("adapter_pool", std::make_unique<AdaptiveAvgPool2d>(backbone.adapter_size, backbone.adapter_size));
  add("flatten", std::make_unique<Flatten>());
  model.top_dense_index_ = model.layers_.size();
  add("top_dense", std::make_unique<Dense>(backbone.flattened_dim(), backbone.feature_dim));
  add("top_relu", std::make_unique<Relu>());
  model.head_begin_ = model.layers_.size();
  add("dropout", std::make_unique<Dropout>(head.dropout_rate));
  add("pool", std::make_unique<AvgPool1d>(head.pool_window));
  add("output", std::make_unique<Dense>(backbone.feature_dim / head.pool_window, kPoseDim));

  // Propagating the per-sample shape validates the whole stack.
  Shape shape = model.input_shape();
  for (const auto& l : model.layers_) shape = l.layer->output_shape(shape);
  if (shape != Shape{kPoseDim}) throw ShapeMismatch("model output is " + shape_string(shape));

  Rng rng(seed);
  for (auto& l : model.layers_) {
    if (auto* conv = dynamic_cast<Conv2d*>(l.layer.get())) conv->initialize(rng);
    if (auto* dense = dynamic_cast<Dense*>(l.layer.get())) dense->initialize(rng);
  }
  return model;
}

void PoseNetModel::copy_from(const PoseNetModel& other) {
  backbone_ = other.backbone_;
  head_ = other.head_;
  lineage_ = other.lineage_;
  normalization_ = other.normalization_;
  layers_.clear();
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back({l.name, l.layer->clone()});
  top_dense_index_ = other.top_dense_index_;
  head_begin_ = other.head_begin_;
  s_x_ = other.s_x_;
  s_q_ = other.s_q_;
  grad_s_x_ = other.grad_s_x_;
  grad_s_q_ = other.grad_s_q_;
}

PoseNetModel::PoseNetModel(const PoseNetModel& other) { copy_from(other); }

PoseNetModel& PoseNetModel::operator=(const PoseNetModel& other) {
  if (this != &other) copy_from(other);
  return *this;
}

Shape PoseNetModel::input_shape() const {
  return {backbone_.input_channels, backbone_.input_size, backbone_.input_size};
}

std::size_t PoseNetModel::first_parametric_index() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!layers_[i].layer->parameters().empty()) return i;
  }
  return layers_.size();
}

Dense& PoseNetModel::top_dense() { return static_cast<Dense&>(*layers_[top_dense_index_].layer); }
const Dense& PoseNetModel::top_dense() const { return static_cast<const Dense&>(*layers_[top_dense_index_].layer); }
Dense& PoseNetModel::output_dense() { return static_cast<Dense&>(*layers_.back().layer); }
const Dense& PoseNetModel::output_dense() const { return static_cast<const Dense&>(*layers_.back().layer); }

void PoseNetModel::set_loss_weights(double s_x, double s_q) {
  s_x_[0] = s_x;
  s_q_[0] = s_q;
}

void PoseNetModel::add_loss_weight_grads(double d_s_x, double d_s_q) {
  grad_s_x_[0] += d_s_x;
  grad_s_q_[0] += d_s_q;
}

void PoseNetModel::set_dropout_rate(double rate) {
  static_cast<Dropout&>(*layers_[head_begin_].layer).set_rate(rate);
  head_.dropout_rate = rate;
}

Tensor PoseNetModel::infer_range(std::size_t begin, std::size_t end, const Tensor& input) const {
  Tensor x = input;
  for (std::size_t i = begin; i < end; ++i) x = layers_[i].layer->infer(x);
  return x;
}

Tensor PoseNetModel::forward_train_from(std::size_t begin, const Tensor& input, Rng& rng) {
  Tensor x = input;
  for (std::size_t i = begin; i < layers_.size(); ++i) x = layers_[i].layer->forward_train(x, rng);
  return x;
}

Tensor PoseNetModel::backward_to(std::size_t begin, const Tensor& grad_output, bool need_input_grad) {
  Tensor g = grad_output;
  for (std::size_t i = layers_.size(); i-- > begin;) {
    g = layers_[i].layer->backward(g, i > begin || need_input_grad);
  }
  return g;
}

Tensor PoseNetModel::forward(const Tensor& batch, Mode mode, Rng& rng) {
  if (mode == Mode::kEval) return predict(batch);
  Shape expected = input_shape();
  if (batch.rank() != 4 || Shape(batch.shape().begin() + 1, batch.shape().end()) != expected) {
    throw ShapeMismatch("model expects (N, " + std::to_string(expected[0]) + ", " + std::to_string(expected[1]) +
                        ", " + std::to_string(expected[2]) + "), got " + shape_string(batch.shape()));
  }
  return forward_train_from(0, batch, rng);
}

Tensor PoseNetModel::predict(const Tensor& batch) const {
  const Shape expected = input_shape();
  if (batch.rank() != 4 || Shape(batch.shape().begin() + 1, batch.shape().end()) != expected) {
    throw ShapeMismatch("model expects (N, " + std::to_string(expected[0]) + ", " + std::to_string(expected[1]) +
                        ", " + std::to_string(expected[2]) + "), got " + shape_string(batch.shape()));
  }
  Tensor out = infer_range(0, layers_.size(), batch);
  renormalize_quaternions(out);
  return out;
}

std::vector<Parameter> PoseNetModel::parameters_from(std::size_t first_layer) {
  std::vector<Parameter> params;
  for (std::size_t i = first_layer; i < layers_.size(); ++i) {
    for (Parameter p : layers_[i].layer->parameters()) {
      p.name = layers_[i].name + "." + p.name;
      params.push_back(std::move(p));
    }
  }
  params.push_back({"loss.s_x", &s_x_, &grad_s_x_});
  params.push_back({"loss.s_q", &s_q_, &grad_s_q_});
  return params;
}

std::vector<Parameter> PoseNetModel::parameters() { return parameters_from(0); }

void PoseNetModel::zero_grad() {
  for (Parameter& p : parameters()) p.grad->fill(0.0);
}

void renormalize_quaternions(Tensor& poses) {
  if (poses.rank() != 2 || poses.dim(1) != kPoseDim) throw ShapeMismatch("expected (N, 7) poses");
  for (std::size_t r = 0; r < poses.dim(0); ++r) {
    double* q = poses.data() + r * kPoseDim + 3;
    const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    if (n == 0.0) continue;
    for (int k = 0; k < 4; ++k) q[k] /= n;
  }
}

}  // namespace posefuse::nn
