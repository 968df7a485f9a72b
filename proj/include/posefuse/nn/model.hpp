#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "posefuse/nn/layers.hpp"
#include "posefuse/nn/tensor.hpp"

namespace posefuse::nn {

inline constexpr std::size_t kPoseDim = 7;
inline constexpr double kInitialSx = 0.0;
inline constexpr double kInitialSq = -3.0;

/// How a model's top dense layer came to be.
enum class Lineage {
  kUnimodal,
  kAdditiveSewn,        // AEF
  kMultiplicativeSewn,  // MEF
};

std::string to_string(Lineage lineage);
Lineage lineage_from_string(std::string_view text);

/// Convolutional feature extractor ending in a dense layer of
/// `feature_dim` units. The fixed stem pooling shrinks the 250x250 input
/// before the first convolution, and the adapter pooling pins the grid the
/// top dense layer sees, so every stand-in exposes a top dense layer of the
/// same shape.
struct BackboneSpec {
  std::string id = "A";
  std::vector<std::size_t> conv_channels{8, 16, 32};
  std::size_t kernel = 3;
  std::size_t stride = 2;
  std::size_t input_channels = 3;
  std::size_t input_size = 250;
  std::size_t stem_pool = 5;
  std::size_t adapter_size = 4;
  std::size_t feature_dim = 64;

  /// Three conv blocks, channels 8/16/32.
  static BackboneSpec standin_a();
  /// Four conv blocks, channels 8/16/24/32.
  static BackboneSpec standin_b();
  /// "A" or "B".
  static BackboneSpec by_id(std::string_view id);

  std::size_t flattened_dim() const { return conv_channels.back() * adapter_size * adapter_size; }
};

/// Dropout -> average pooling -> dense(7).
struct HeadSpec {
  double dropout_rate = 0.5;
  std::size_t pool_window = 2;
};

/// Statistics that map raw data into network space, carried with the model
/// so a saved model can be used on its own.
struct DataNormalization {
  std::array<double, 3> image_mean{0.0, 0.0, 0.0};
  std::array<double, 3> image_std{1.0, 1.0, 1.0};
  std::array<double, 3> translation_mean{0.0, 0.0, 0.0};
  std::array<double, 3> translation_std{1.0, 1.0, 1.0};
};

/// Backbone + regressor head + the two learnable loss weights s_x, s_q.
/// Output rows are (tx, ty, tz, qw, qx, qy, qz) with translation in
/// normalized units.
class PoseNetModel {
 public:
  static PoseNetModel build(const BackboneSpec& backbone, const HeadSpec& head, std::uint64_t seed);

  PoseNetModel(const PoseNetModel& other);
  PoseNetModel& operator=(const PoseNetModel& other);
  PoseNetModel(PoseNetModel&&) noexcept = default;
  PoseNetModel& operator=(PoseNetModel&&) noexcept = default;
  ~PoseNetModel() = default;

  const BackboneSpec& backbone() const { return backbone_; }
  const HeadSpec& head() const { return head_; }
  Lineage lineage() const { return lineage_; }
  void set_lineage(Lineage lineage) { lineage_ = lineage; }
  DataNormalization& normalization() { return normalization_; }
  const DataNormalization& normalization() const { return normalization_; }

  /// Per-sample input shape (C, H, W).
  Shape input_shape() const;

  std::size_t layer_count() const { return layers_.size(); }
  const std::string& layer_name(std::size_t i) const { return layers_.at(i).name; }
  Layer& layer(std::size_t i) { return *layers_.at(i).layer; }
  const Layer& layer(std::size_t i) const { return *layers_.at(i).layer; }
  std::size_t top_dense_index() const { return top_dense_index_; }
  std::size_t head_begin() const { return head_begin_; }
  /// Index of the first layer holding parameters.
  std::size_t first_parametric_index() const;

  Dense& top_dense();
  const Dense& top_dense() const;
  Dense& output_dense();
  const Dense& output_dense() const;

  double s_x() const { return s_x_[0]; }
  double s_q() const { return s_q_[0]; }
  void set_loss_weights(double s_x, double s_q);
  double grad_s_x() const { return grad_s_x_[0]; }
  double grad_s_q() const { return grad_s_q_[0]; }
  void add_loss_weight_grads(double d_s_x, double d_s_q);

  void set_dropout_rate(double rate);

  /// Full network. Train mode returns raw outputs with dropout active and
  /// records state for backward(); eval mode renormalizes the quaternion
  /// block and leaves the model untouched.
  Tensor forward(const Tensor& batch, Mode mode, Rng& rng);
  /// Eval-mode forward; read-only, safe to call concurrently.
  Tensor predict(const Tensor& batch) const;

  /// Eval-mode pass through layers [begin, end) without renormalization.
  Tensor infer_range(std::size_t begin, std::size_t end, const Tensor& input) const;
  /// Train-mode pass through layers [begin, layer_count()).
  Tensor forward_train_from(std::size_t begin, const Tensor& input, Rng& rng);
  /// Backpropagates from the output down to layer `begin`, accumulating
  /// gradients. Returns dL/d(input of layer begin) when requested.
  Tensor backward_to(std::size_t begin, const Tensor& grad_output, bool need_input_grad = false);

  /// Every parameter, prefixed with its layer name, then loss.s_x, loss.s_q.
  std::vector<Parameter> parameters();
  /// Parameters of layers [first_layer, end) plus the loss weights.
  std::vector<Parameter> parameters_from(std::size_t first_layer);
  void zero_grad();

 private:
  struct NamedLayer {
    std::string name;
    std::unique_ptr<Layer> layer;
  };

  PoseNetModel() = default;
  void copy_from(const PoseNetModel& other);

  BackboneSpec backbone_;
  HeadSpec head_;
  Lineage lineage_ = Lineage::kUnimodal;
  DataNormalization normalization_;
  std::vector<NamedLayer> layers_;
  std::size_t top_dense_index_ = 0;
  std::size_t head_begin_ = 0;
  Tensor s_x_{{1}, kInitialSx}, s_q_{{1}, kInitialSq};
  Tensor grad_s_x_{{1}}, grad_s_q_{{1}};
};

/// Renormalizes columns 3..6 of every (N, 7) row in place. Rows with a zero
/// quaternion block are left unchanged.
void renormalize_quaternions(Tensor& poses);

}  // namespace posefuse::nn
