#include "posefuse/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace posefuse::nn {

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                 std::span<double> second_moment, std::uint64_t step, const AdamConfig& config) {
  if (grads.size() != params.size() || first_moment.size() != params.size() ||
      second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_update: buffer sizes differ");
  }
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first_moment[i] = config.beta1 * first_moment[i] + (1.0 - config.beta1) * g;
    second_moment[i] = config.beta2 * second_moment[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = first_moment[i] / correction1;
    const double v_hat = second_moment[i] / correction2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

void Adam::step(const std::vector<Parameter>& params) {
  if (m_.empty()) {
    for (const Parameter& p : params) {
      m_.emplace_back(p.value->size(), 0.0);
      v_.emplace_back(p.value->size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw std::logic_error("adam: parameter list changed between steps");
  ++step_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam_update(params[i].value->values(), params[i].grad->values(), m_[i], v_[i], step_, config_);
  }
}

}  // namespace posefuse::nn
