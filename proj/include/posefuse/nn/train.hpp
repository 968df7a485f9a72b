#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "posefuse/nn/loss.hpp"
#include "posefuse/nn/model.hpp"

namespace posefuse::nn {

/// Indexed supervised samples: per-sample input (C, H, W) and a 7-vector
/// target in network space.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual Tensor input(std::size_t index) const = 0;
  virtual std::array<double, kPoseDim> target(std::size_t index) const = 0;
};

class InMemorySamples final : public SampleSource {
 public:
  InMemorySamples() = default;
  InMemorySamples(std::vector<Tensor> inputs, std::vector<std::array<double, kPoseDim>> targets);

  std::size_t size() const override { return inputs_.size(); }
  Tensor input(std::size_t index) const override { return inputs_.at(index); }
  std::array<double, kPoseDim> target(std::size_t index) const override { return targets_.at(index); }

 private:
  std::vector<Tensor> inputs_;
  std::vector<std::array<double, kPoseDim>> targets_;
};

/// Which layers receive gradient updates. Layers below the scope are treated
/// as a frozen pretrained feature extractor and evaluated once per sample.
enum class TrainableScope { kHead, kTopDenseAndHead, kAll };

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t batch_size = 34;
  double dropout_rate = 0.5;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  TrainableScope scope = TrainableScope::kTopDenseAndHead;
  ResidualNorm norm = ResidualNorm::kL1;
};

struct TrainHistory {
  /// Sample-weighted mean training loss of each epoch.
  std::vector<double> epoch_loss;
};

/// Index of the first layer updated under `scope`.
std::size_t first_trainable_layer(const PoseNetModel& model, TrainableScope scope);

/// Minimizes the log-variance loss with Adam. Deterministic for a given
/// model, data order and config.seed. Throws EmptyDataset, DivergedTraining
/// (non-finite loss) and NaNGradient.
TrainHistory train(PoseNetModel& model, const SampleSource& data, const TrainConfig& config);

/// Zeroes gradients, runs a train-mode pass from `first_layer` and
/// backpropagates the log-variance loss, including into s_x and s_q.
/// Returns the loss value.
double accumulate_gradients(PoseNetModel& model, const Tensor& input, const Tensor& targets, ResidualNorm norm,
                            Rng& rng, std::size_t first_layer = 0);

/// Eval-mode predictions for every sample, (N, 7), in chunks.
Tensor predict_samples(const PoseNetModel& model, const SampleSource& data, std::size_t chunk = 32);

}  // namespace posefuse::nn
