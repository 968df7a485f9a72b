#pragma once

// Central finite-difference checks for layers and the pose loss.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "posefuse/nn/layers.hpp"
#include "posefuse/nn/loss.hpp"
#include "posefuse/nn/model.hpp"
#include "posefuse/nn/train.hpp"
#include "posefuse/util/rng.hpp"

namespace posefuse::testing {

struct GradReport {
  std::string what;
  double worst_rel = 0.0;
  std::size_t checked = 0;
};

inline double rel_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

/// Fills a tensor with values in +-[0.1, 1], away from ReLU kinks.
inline void fill_away_from_zero(nn::Tensor& t, Rng& rng) {
  for (double& v : t.values()) {
    const double mag = rng.uniform(0.1, 1.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
}

/// Indices to probe: all of them for small tensors, a spread sample otherwise.
inline std::vector<std::size_t> probe_indices(std::size_t n, std::size_t limit = 40) {
  std::vector<std::size_t> out;
  if (n <= limit) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
  } else {
    for (std::size_t k = 0; k < limit; ++k) out.push_back(k * (n - 1) / (limit - 1));
  }
  return out;
}

/// Objective sum(r * layer(x)) with fixed weights r. The layer runs in train
/// mode with a fresh Rng(seed) on each evaluation so stochastic masks stay
/// fixed.
inline std::vector<GradReport> check_layer(nn::Layer& layer, nn::Tensor input, std::uint64_t seed = 5,
                                           double h = 1e-6) {
  Rng data_rng(seed + 100);
  auto run = [&](const nn::Tensor& x) {
    Rng rng(seed);
    return layer.forward_train(x, rng);
  };
  const nn::Tensor out0 = run(input);
  nn::Tensor r(out0.shape());
  for (double& v : r.values()) v = data_rng.uniform(-1.0, 1.0);
  auto objective = [&](const nn::Tensor& x) {
    const nn::Tensor y = run(x);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i];
    return s;
  };

  for (nn::Parameter& p : layer.parameters()) p.grad->fill(0.0);
  run(input);
  const nn::Tensor input_grad = layer.backward(r, true);

  std::vector<GradReport> reports;
  GradReport in{layer.kind() + ".input", 0.0, 0};
  for (std::size_t i : probe_indices(input.size())) {
    nn::Tensor xp = input, xm = input;
    xp[i] += h;
    xm[i] -= h;
    const double numeric = (objective(xp) - objective(xm)) / (2 * h);
    in.worst_rel = std::max(in.worst_rel, rel_error(input_grad[i], numeric));
    ++in.checked;
  }
  reports.push_back(in);

  for (nn::Parameter& p : layer.parameters()) {
    const nn::Tensor analytic = *p.grad;
    GradReport rep{layer.kind() + "." + p.name, 0.0, 0};
    for (std::size_t i : probe_indices(p.value->size())) {
      const double orig = (*p.value)[i];
      (*p.value)[i] = orig + h;
      const double fp = objective(input);
      (*p.value)[i] = orig - h;
      const double fm = objective(input);
      (*p.value)[i] = orig;
      rep.worst_rel = std::max(rep.worst_rel, rel_error(analytic[i], (fp - fm) / (2 * h)));
      ++rep.checked;
    }
    reports.push_back(rep);
  }
  return reports;
}

/// Checks d(loss)/d(s_x), d(loss)/d(s_q) and d(loss)/d(pred) of the stable
/// log-variance loss at the given loss weights.
inline std::vector<GradReport> check_stable_loss(const nn::Tensor& pred, const nn::Tensor& gt, double s_x,
                                                 double s_q, nn::ResidualNorm norm, double h = 1e-6) {
  const nn::StableLossGradient g = nn::loss_stable_with_gradient(pred, gt, s_x, s_q, norm);
  std::vector<GradReport> out;
  const double nx = (nn::loss_stable(pred, gt, s_x + h, s_q, norm) - nn::loss_stable(pred, gt, s_x - h, s_q, norm)) / (2 * h);
  const double nq = (nn::loss_stable(pred, gt, s_x, s_q + h, norm) - nn::loss_stable(pred, gt, s_x, s_q - h, norm)) / (2 * h);
  out.push_back({"loss.s_x", rel_error(g.d_s_x, nx), 1});
  out.push_back({"loss.s_q", rel_error(g.d_s_q, nq), 1});
  GradReport rp{"loss.pred", 0.0, 0};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    nn::Tensor pp = pred, pm = pred;
    pp[i] += h;
    pm[i] -= h;
    const double numeric = (nn::loss_stable(pp, gt, s_x, s_q, norm) - nn::loss_stable(pm, gt, s_x, s_q, norm)) / (2 * h);
    rp.worst_rel = std::max(rp.worst_rel, rel_error(g.d_pred[i], numeric));
    ++rp.checked;
  }
  out.push_back(rp);
  return out;
}

/// Per-sample inputs of shape `shape` with targets carrying unit quaternions.
inline nn::InMemorySamples random_samples(std::size_t n, const nn::Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<nn::Tensor> inputs;
  std::vector<std::array<double, nn::kPoseDim>> targets;
  for (std::size_t i = 0; i < n; ++i) {
    nn::Tensor x(shape);
    for (double& v : x.values()) v = rng.uniform(-1.0, 1.0);
    inputs.push_back(std::move(x));
    std::array<double, nn::kPoseDim> t{};
    double norm = 0;
    for (std::size_t k = 0; k < nn::kPoseDim; ++k) t[k] = rng.uniform(-1.0, 1.0);
    for (std::size_t k = 3; k < 7; ++k) norm += t[k] * t[k];
    for (std::size_t k = 3; k < 7; ++k) t[k] /= std::sqrt(norm);
    targets.push_back(t);
  }
  return nn::InMemorySamples(std::move(inputs), std::move(targets));
}

}  // namespace posefuse::testing
