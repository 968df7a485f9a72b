#include "posefuse/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "posefuse/error.hpp"
#include "posefuse/nn/adam.hpp"

namespace posefuse::nn {

InMemorySamples::InMemorySamples(std::vector<Tensor> inputs, std::vector<std::array<double, kPoseDim>> targets)
    : inputs_(std::move(inputs)), targets_(std::move(targets)) {
  if (inputs_.size() != targets_.size()) throw ShapeMismatch("input and target counts differ");
}

std::size_t first_trainable_layer(const PoseNetModel& model, TrainableScope scope) {
  switch (scope) {
    case TrainableScope::kHead: return model.head_begin();
    case TrainableScope::kTopDenseAndHead: return model.top_dense_index();
    case TrainableScope::kAll: return model.first_parametric_index();
  }
  return model.top_dense_index();
}

namespace {

Tensor gather_rows(const Tensor& all, std::span<const std::size_t> rows) {
  const std::size_t per = all.sample_size();
  Shape shape = all.shape();
  shape[0] = rows.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(all.data() + rows[i] * per, per, out.data() + i * per);
  }
  return out;
}

Tensor stack_inputs(const SampleSource& data, std::size_t begin, std::size_t end) {
  std::vector<Tensor> samples;
  samples.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) samples.push_back(data.input(i));
  return stack(samples);
}

}  // namespace

double accumulate_gradients(PoseNetModel& model, const Tensor& input, const Tensor& targets, ResidualNorm norm,
                            Rng& rng, std::size_t first_layer) {
  model.zero_grad();
  const Tensor pred = model.forward_train_from(first_layer, input, rng);
  const StableLossGradient loss = loss_stable_with_gradient(pred, targets, model.s_x(), model.s_q(), norm);
  model.backward_to(first_layer, loss.d_pred);
  model.add_loss_weight_grads(loss.d_s_x, loss.d_s_q);
  return loss.value;
}

TrainHistory train(PoseNetModel& model, const SampleSource& data, const TrainConfig& config) {
  const std::size_t n = data.size();
  if (n == 0) throw EmptyDataset("train: dataset is empty");
  if (config.batch_size == 0 || !(config.learning_rate > 0.0)) {
    throw Error("train: batch size and learning rate must be positive");
  }
  TrainHistory history;
  if (config.epochs == 0) return history;

  model.set_dropout_rate(config.dropout_rate);
  const std::size_t first = first_trainable_layer(model, config.scope);

  // Frozen prefix output for every sample, computed once.
  Tensor features;
  {
    constexpr std::size_t kChunk = 32;
    std::vector<Tensor> chunks;
    for (std::size_t b = 0; b < n; b += kChunk) {
      chunks.push_back(model.infer_range(0, first, stack_inputs(data, b, std::min(n, b + kChunk))));
    }
    Shape shape = chunks.front().shape();
    shape[0] = n;
    features = Tensor(shape);
    std::size_t offset = 0;
    for (const Tensor& c : chunks) {
      std::copy(c.values().begin(), c.values().end(), features.data() + offset);
      offset += c.size();
    }
  }
  Tensor targets({n, kPoseDim});
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = data.target(i);
    std::copy(t.begin(), t.end(), targets.data() + i * kPoseDim);
  }

  Adam optimizer(AdamConfig{.learning_rate = config.learning_rate});
  const std::vector<Parameter> params = model.parameters_from(first);
  Rng shuffle_rng(derive_seed(config.seed, 11));
  Rng dropout_rng(derive_seed(config.seed, 12));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    double epoch_sum = 0.0;
    for (std::size_t b = 0; b < n; b += config.batch_size) {
      const std::span<const std::size_t> rows(order.data() + b, std::min(config.batch_size, n - b));
      const double loss = accumulate_gradients(model, gather_rows(features, rows), gather_rows(targets, rows),
                                               config.norm, dropout_rng, first);
      if (!std::isfinite(loss)) {
        throw DivergedTraining("training loss became non-finite at epoch " + std::to_string(epoch));
      }
      for (const Parameter& p : params) {
        if (!p.grad->all_finite()) throw NaNGradient("non-finite gradient for " + p.name);
      }
      optimizer.step(params);
      epoch_sum += loss * static_cast<double>(rows.size());
    }
    history.epoch_loss.push_back(epoch_sum / static_cast<double>(n));
  }
  return history;
}

Tensor predict_samples(const PoseNetModel& model, const SampleSource& data, std::size_t chunk) {
  const std::size_t n = data.size();
  Tensor out({n, kPoseDim});
  for (std::size_t b = 0; b < n; b += chunk) {
    const std::size_t e = std::min(n, b + chunk);
    const Tensor pred = model.predict(stack_inputs(data, b, e));
    std::copy(pred.values().begin(), pred.values().end(), out.data() + b * kPoseDim);
  }
  return out;
}

}  // namespace posefuse::nn
