#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posefuse/geometry.hpp"
#include "posefuse/nn/model.hpp"
#include "posefuse/nn/train.hpp"

namespace posefuse::fusion {

/// Add and Multiply are valid for early fusion; Average and Multiply for
/// late fusion.
enum class FusionOp { kAdd, kMultiply, kAverage };
enum class FusionStage { kEarly, kLate, kHybrid };

std::string to_string(FusionOp op);
std::string to_string(FusionStage stage);
FusionOp fusion_op_from_string(const std::string& text);
FusionStage fusion_stage_from_string(const std::string& text);

/// One fusion step of an experiment: which members, which stage, which op.
struct FusionSpec {
  std::string name;
  FusionStage stage = FusionStage::kLate;
  FusionOp op = FusionOp::kAverage;
  std::vector<std::string> members;
};

struct FusedPrediction {
  Pose pose;
  std::vector<Pose> members;
  FusionOp op = FusionOp::kAverage;
};

/// How Multiply treats translations. The literal elementwise product has
/// units of m^n; the signed geometric mean sign(prod) * |prod|^(1/n) keeps
/// meters.
enum class TranslationProduct { kLiteral, kSignedGeometricMean };

/// Which predictions the full hybrid averages: the four early-fusion
/// members directly, or the AHL and MHL outputs.
enum class HlffMode { kFourMembers, kHybridOutputs };

struct LateFusionOptions {
  TranslationProduct translation_product = TranslationProduct::kLiteral;
  HlffMode hlff_mode = HlffMode::kFourMembers;
};

// ---- early fusion ----------------------------------------------------------

/// Elementwise sum or product of weights and biases. Throws ShapeMismatch
/// on differing shapes and Error for an op other than Add/Multiply.
nn::Dense early_fuse_weights(const nn::Dense& a, const nn::Dense& b, FusionOp op);

nn::Lineage lineage_for(FusionOp early_op);

/// Copies of both models with their top dense layer replaced by `fused`
/// and tagged with `lineage`. Every other parameter is copied bit for bit.
std::pair<nn::PoseNetModel, nn::PoseNetModel> sew_into_models(const nn::PoseNetModel& a,
                                                               const nn::PoseNetModel& b,
                                                               const nn::Dense& fused, nn::Lineage lineage);

/// Trains a sewn model in place. Throws LineageMismatch for unimodal
/// models.
nn::TrainHistory retrain_after_sewing(nn::PoseNetModel& model, const nn::SampleSource& data,
                                      const nn::TrainConfig& config);

// ---- late fusion -----------------------------------------------------------

/// Fuses >= 2 poses. Translations are averaged or multiplied elementwise;
/// quaternions are sign-aligned to the first member, fused elementwise and
/// renormalized. Throws EmptyEnsemble and DegenerateQuaternion (fused
/// quaternion norm < 1e-9).
Pose late_fuse_poses(std::span<const Pose> poses, FusionOp op, const LateFusionOptions& options = {});

/// Per-sample fusion of aligned member prediction lists.
std::vector<FusedPrediction> fuse_member_predictions(std::span<const std::vector<Pose>> members, FusionOp op,
                                                     const LateFusionOptions& options = {});

/// Eval-mode predictions in meters (translation denormalized with the
/// model's statistics).
std::vector<Pose> predict_poses(const nn::PoseNetModel& model, const nn::SampleSource& data);

/// Predictions of several read-only models, computed on worker threads.
std::vector<std::vector<Pose>> predict_members(std::span<const nn::PoseNetModel* const> models,
                                               const nn::SampleSource& data);

/// Average late fusion of independently trained models.
std::vector<FusedPrediction> build_lf(std::span<const nn::PoseNetModel* const> models,
                                      const nn::SampleSource& data, const LateFusionOptions& options = {});
/// Average of two Add-sewn models.
std::vector<FusedPrediction> build_ahl(const nn::PoseNetModel& aef_a, const nn::PoseNetModel& aef_b,
                                       const nn::SampleSource& data, const LateFusionOptions& options = {});
/// Multiplicative fusion of two Multiply-sewn models.
std::vector<FusedPrediction> build_mhl(const nn::PoseNetModel& mef_a, const nn::PoseNetModel& mef_b,
                                       const nn::SampleSource& data, const LateFusionOptions& options = {});
/// Average over all four early-fusion models (or over AHL and MHL, per
/// options.hlff_mode).
std::vector<FusedPrediction> build_hlff(const nn::PoseNetModel& aef_a, const nn::PoseNetModel& aef_b,
                                        const nn::PoseNetModel& mef_a, const nn::PoseNetModel& mef_b,
                                        const nn::SampleSource& data, const LateFusionOptions& options = {});

/// Which hybrid a member set forms, from the members' lineages:
/// Average over 2 AEF = AHL, Multiply over 2 MEF = MHL, Average over 2 AEF
/// + 2 MEF = HLFF. Throws LineageMismatch otherwise.
enum class HybridKind { kAhl, kMhl, kHlff };
HybridKind classify_hybrid(std::span<const nn::PoseNetModel* const> members, FusionOp op);

}  // namespace posefuse::fusion
