#pragma once

#include "posefuse/nn/tensor.hpp"

namespace posefuse::nn {

/// Norm applied to the per-sample translation (3) and quaternion (4)
/// residual blocks.
enum class ResidualNorm { kL1, kL2 };

/// Batch-mean translation and rotation residual losses.
struct LossTerms {
  double translation = 0.0;  // L_x
  double rotation = 0.0;     // L_q
};

/// Both tensors are (N, 7); N >= 1.
LossTerms residual_losses(const Tensor& pred, const Tensor& gt, ResidualNorm norm = ResidualNorm::kL1);

/// L_x + beta * L_q.
double loss_beta(const LossTerms& terms, double beta);
double loss_beta(const Tensor& pred, const Tensor& gt, double beta, ResidualNorm norm = ResidualNorm::kL1);

/// L_x / sigma_x^2 + log sigma_x^2 + L_q / sigma_q^2 + log sigma_q^2.
/// Throws NonPositiveSigma unless both sigmas are positive.
double loss_homoscedastic(const LossTerms& terms, double sigma_x, double sigma_q);
double loss_homoscedastic(const Tensor& pred, const Tensor& gt, double sigma_x, double sigma_q,
                          ResidualNorm norm = ResidualNorm::kL1);

/// Log-variance form: L_x exp(-s_x) + s_x + L_q exp(-s_q) + s_q, where
/// s = log sigma^2.
double loss_stable(const LossTerms& terms, double s_x, double s_q);
double loss_stable(const Tensor& pred, const Tensor& gt, double s_x, double s_q,
                   ResidualNorm norm = ResidualNorm::kL1);

struct StableLossGradient {
  double value = 0.0;
  LossTerms terms;
  Tensor d_pred;  // (N, 7)
  double d_s_x = 0.0;
  double d_s_q = 0.0;
};

/// loss_stable together with its gradient w.r.t. predictions and the two
/// log-variances. At a zero residual the L1 subgradient 0 is used.
StableLossGradient loss_stable_with_gradient(const Tensor& pred, const Tensor& gt, double s_x, double s_q,
                                             ResidualNorm norm = ResidualNorm::kL1);

}  // namespace posefuse::nn
