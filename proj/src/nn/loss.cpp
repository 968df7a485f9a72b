#include "posefuse/nn/loss.hpp"

#include <cmath>

#include "posefuse/error.hpp"
#include "posefuse/nn/model.hpp"

namespace posefuse::nn {

namespace {

void check_pair(const Tensor& pred, const Tensor& gt) {
  if (pred.rank() != 2 || pred.dim(1) != kPoseDim || pred.shape() != gt.shape() || pred.dim(0) == 0) {
    throw ShapeMismatch("loss: expected matching (N, 7) tensors, got " + shape_string(pred.shape()) + " and " +
                        shape_string(gt.shape()));
  }
}

double block_norm(const double* r, std::size_t n, ResidualNorm norm) {
  double acc = 0.0;
  if (norm == ResidualNorm::kL1) {
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(r[i]);
    return acc;
  }
  for (std::size_t i = 0; i < n; ++i) acc += r[i] * r[i];
  return std::sqrt(acc);
}

// d|r|/dr for one block, scaled by `scale`.
void block_norm_gradient(const double* r, std::size_t n, ResidualNorm norm, double scale, double* out) {
  if (norm == ResidualNorm::kL1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = r[i] > 0.0 ? scale : (r[i] < 0.0 ? -scale : 0.0);
    return;
  }
  const double len = block_norm(r, n, norm);
  for (std::size_t i = 0; i < n; ++i) out[i] = len > 0.0 ? scale * r[i] / len : 0.0;
}

}  // namespace

LossTerms residual_losses(const Tensor& pred, const Tensor& gt, ResidualNorm norm) {
  check_pair(pred, gt);
  const std::size_t n = pred.dim(0);
  LossTerms terms;
  double r[kPoseDim];
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t k = 0; k < kPoseDim; ++k) r[k] = pred[s * kPoseDim + k] - gt[s * kPoseDim + k];
    terms.translation += block_norm(r, 3, norm);
    terms.rotation += block_norm(r + 3, 4, norm);
  }
  terms.translation /= static_cast<double>(n);
  terms.rotation /= static_cast<double>(n);
  return terms;
}

double loss_beta(const LossTerms& terms, double beta) { return terms.translation + beta * terms.rotation; }

double loss_beta(const Tensor& pred, const Tensor& gt, double beta, ResidualNorm norm) {
  return loss_beta(residual_losses(pred, gt, norm), beta);
}

double loss_homoscedastic(const LossTerms& terms, double sigma_x, double sigma_q) {
  if (!(sigma_x > 0.0) || !(sigma_q > 0.0)) throw NonPositiveSigma("loss_homoscedastic: sigmas must be positive");
  const double var_x = sigma_x * sigma_x;
  const double var_q = sigma_q * sigma_q;
  return terms.translation / var_x + std::log(var_x) + terms.rotation / var_q + std::log(var_q);
}

double loss_homoscedastic(const Tensor& pred, const Tensor& gt, double sigma_x, double sigma_q, ResidualNorm norm) {
  return loss_homoscedastic(residual_losses(pred, gt, norm), sigma_x, sigma_q);
}

double loss_stable(const LossTerms& terms, double s_x, double s_q) {
  return terms.translation * std::exp(-s_x) + s_x + terms.rotation * std::exp(-s_q) + s_q;
}

double loss_stable(const Tensor& pred, const Tensor& gt, double s_x, double s_q, ResidualNorm norm) {
  return loss_stable(residual_losses(pred, gt, norm), s_x, s_q);
}

StableLossGradient loss_stable_with_gradient(const Tensor& pred, const Tensor& gt, double s_x, double s_q,
                                             ResidualNorm norm) {
  StableLossGradient out;
  out.terms = residual_losses(pred, gt, norm);
  out.value = loss_stable(out.terms, s_x, s_q);
  const double w_x = std::exp(-s_x);
  const double w_q = std::exp(-s_q);
  out.d_s_x = 1.0 - out.terms.translation * w_x;
  out.d_s_q = 1.0 - out.terms.rotation * w_q;

  const std::size_t n = pred.dim(0);
  const double inv_n = 1.0 / static_cast<double>(n);
  out.d_pred = Tensor(pred.shape());
  double r[kPoseDim];
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t k = 0; k < kPoseDim; ++k) r[k] = pred[s * kPoseDim + k] - gt[s * kPoseDim + k];
    double* g = out.d_pred.data() + s * kPoseDim;
    block_norm_gradient(r, 3, norm, w_x * inv_n, g);
    block_norm_gradient(r + 3, 4, norm, w_q * inv_n, g + 3);
  }
  return out;
}

}  // namespace posefuse::nn
