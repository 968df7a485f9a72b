#include "posefuse/fusion.hpp"

#include <cmath>

#include "posefuse/error.hpp"
#include "posefuse/util/parallel.hpp"

namespace posefuse::fusion {

std::string to_string(FusionOp op) {
  switch (op) {
    case FusionOp::kAdd: return "add";
    case FusionOp::kMultiply: return "multiply";
    case FusionOp::kAverage: return "average";
  }
  return "average";
}

std::string to_string(FusionStage stage) {
  switch (stage) {
    case FusionStage::kEarly: return "early";
    case FusionStage::kLate: return "late";
    case FusionStage::kHybrid: return "hybrid";
  }
  return "late";
}

FusionOp fusion_op_from_string(const std::string& text) {
  if (text == "add") return FusionOp::kAdd;
  if (text == "multiply") return FusionOp::kMultiply;
  if (text == "average") return FusionOp::kAverage;
  throw Error("unknown fusion op '" + text + "' (expected add, multiply or average)");
}

FusionStage fusion_stage_from_string(const std::string& text) {
  if (text == "early") return FusionStage::kEarly;
  if (text == "late") return FusionStage::kLate;
  if (text == "hybrid") return FusionStage::kHybrid;
  throw Error("unknown fusion stage '" + text + "' (expected early, late or hybrid)");
}

nn::Dense early_fuse_weights(const nn::Dense& a, const nn::Dense& b, FusionOp op) {
  if (op == FusionOp::kAverage) throw Error("early fusion supports add and multiply only");
  if (a.weights().shape() != b.weights().shape() || a.bias().shape() != b.bias().shape()) {
    throw ShapeMismatch("early fusion: dense layers " + nn::shape_string(a.weights().shape()) + " and " +
                        nn::shape_string(b.weights().shape()) + " differ");
  }
  nn::Dense fused = a;
  auto combine = [op](nn::Tensor& out, const nn::Tensor& other) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = op == FusionOp::kAdd ? out[i] + other[i] : out[i] * other[i];
    }
  };
  combine(fused.weights(), b.weights());
  combine(fused.bias(), b.bias());
  return fused;
}

nn::Lineage lineage_for(FusionOp early_op) {
  switch (early_op) {
    case FusionOp::kAdd: return nn::Lineage::kAdditiveSewn;
    case FusionOp::kMultiply: return nn::Lineage::kMultiplicativeSewn;
    case FusionOp::kAverage: break;
  }
  throw Error("early fusion supports add and multiply only");
}

std::pair<nn::PoseNetModel, nn::PoseNetModel> sew_into_models(const nn::PoseNetModel& a,
                                                               const nn::PoseNetModel& b,
                                                               const nn::Dense& fused, nn::Lineage lineage) {
  auto sew = [&](const nn::PoseNetModel& source) {
    if (source.top_dense().weights().shape() != fused.weights().shape() ||
        source.top_dense().bias().shape() != fused.bias().shape()) {
      throw ShapeMismatch("sewing: fused layer " + nn::shape_string(fused.weights().shape()) +
                          " does not fit top dense " + nn::shape_string(source.top_dense().weights().shape()));
    }
    nn::PoseNetModel out = source;
    out.top_dense().weights() = fused.weights();
    out.top_dense().bias() = fused.bias();
    out.set_lineage(lineage);
    return out;
  };
  return {sew(a), sew(b)};
}

nn::TrainHistory retrain_after_sewing(nn::PoseNetModel& model, const nn::SampleSource& data,
                                      const nn::TrainConfig& config) {
  if (model.lineage() == nn::Lineage::kUnimodal) {
    throw LineageMismatch("retrain_after_sewing: model carries no sewn weights");
  }
  return nn::train(model, data, config);
}

Pose late_fuse_poses(std::span<const Pose> poses, FusionOp op, const LateFusionOptions& options) {
  if (poses.size() < 2) throw EmptyEnsemble("late fusion needs at least two poses");
  if (op == FusionOp::kAdd) throw Error("late fusion supports average and multiply only");

  const Quaternion& reference = poses.front().q;
  const bool average = op == FusionOp::kAverage;
  std::array<double, 3> t = average ? std::array<double, 3>{0, 0, 0} : std::array<double, 3>{1, 1, 1};
  std::array<double, 4> q = average ? std::array<double, 4>{0, 0, 0, 0} : std::array<double, 4>{1, 1, 1, 1};
  for (const Pose& p : poses) {
    const auto ta = p.t.as_array();
    const auto qa = sign_align(reference, p.q).as_array();
    for (int k = 0; k < 3; ++k) t[k] = average ? t[k] + ta[k] : t[k] * ta[k];
    for (int k = 0; k < 4; ++k) q[k] = average ? q[k] + qa[k] : q[k] * qa[k];
  }

  const double n = static_cast<double>(poses.size());
  if (average) {
    for (double& v : t) v /= n;
    for (double& v : q) v /= n;
  } else if (options.translation_product == TranslationProduct::kSignedGeometricMean) {
    for (double& v : t) v = std::copysign(std::pow(std::abs(v), 1.0 / n), v);
  }

  const Quaternion fused_q{q[0], q[1], q[2], q[3]};
  const double norm = fused_q.norm();
  if (!(norm >= 1e-9)) throw DegenerateQuaternion("fused quaternion norm collapsed below 1e-9");
  return {{t[0], t[1], t[2]}, {q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm}};
}

std::vector<FusedPrediction> fuse_member_predictions(std::span<const std::vector<Pose>> members, FusionOp op,
                                                     const LateFusionOptions& options) {
  if (members.size() < 2) throw EmptyEnsemble("late fusion needs at least two members");
  const std::size_t n = members.front().size();
  for (const auto& m : members) {
    if (m.size() != n) throw LengthMismatch("member prediction lists differ in length");
  }
  std::vector<FusedPrediction> out(n);
  std::vector<Pose> sample(members.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < members.size(); ++m) sample[m] = members[m][i];
    out[i] = {late_fuse_poses(sample, op, options), sample, op};
  }
  return out;
}

std::vector<Pose> predict_poses(const nn::PoseNetModel& model, const nn::SampleSource& data) {
  const nn::Tensor raw = nn::predict_samples(model, data);
  const nn::DataNormalization& norm = model.normalization();
  std::vector<Pose> poses(raw.dim(0));
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const double* r = raw.data() + i * nn::kPoseDim;
    poses[i].t = {r[0] * norm.translation_std[0] + norm.translation_mean[0],
                  r[1] * norm.translation_std[1] + norm.translation_mean[1],
                  r[2] * norm.translation_std[2] + norm.translation_mean[2]};
    poses[i].q = {r[3], r[4], r[5], r[6]};
  }
  return poses;
}

std::vector<std::vector<Pose>> predict_members(std::span<const nn::PoseNetModel* const> models,
                                               const nn::SampleSource& data) {
  std::vector<std::vector<Pose>> out(models.size());
  parallel_for(models.size(), [&](std::size_t i) { out[i] = predict_poses(*models[i], data); });
  return out;
}

namespace {

void require_lineage(const nn::PoseNetModel& model, nn::Lineage expected, const char* who) {
  if (model.lineage() != expected) {
    throw LineageMismatch(std::string(who) + ": expected " + nn::to_string(expected) + " member, got " +
                          nn::to_string(model.lineage()));
  }
}

}  // namespace

std::vector<FusedPrediction> build_lf(std::span<const nn::PoseNetModel* const> models,
                                      const nn::SampleSource& data, const LateFusionOptions& options) {
  if (models.size() < 2) throw EmptyEnsemble("LF needs at least two models");
  return fuse_member_predictions(predict_members(models, data), FusionOp::kAverage, options);
}

std::vector<FusedPrediction> build_ahl(const nn::PoseNetModel& aef_a, const nn::PoseNetModel& aef_b,
                                       const nn::SampleSource& data, const LateFusionOptions& options) {
  require_lineage(aef_a, nn::Lineage::kAdditiveSewn, "AHL");
  require_lineage(aef_b, nn::Lineage::kAdditiveSewn, "AHL");
  const nn::PoseNetModel* members[] = {&aef_a, &aef_b};
  return fuse_member_predictions(predict_members(members, data), FusionOp::kAverage, options);
}

std::vector<FusedPrediction> build_mhl(const nn::PoseNetModel& mef_a, const nn::PoseNetModel& mef_b,
                                       const nn::SampleSource& data, const LateFusionOptions& options) {
  require_lineage(mef_a, nn::Lineage::kMultiplicativeSewn, "MHL");
  require_lineage(mef_b, nn::Lineage::kMultiplicativeSewn, "MHL");
  const nn::PoseNetModel* members[] = {&mef_a, &mef_b};
  return fuse_member_predictions(predict_members(members, data), FusionOp::kMultiply, options);
}

std::vector<FusedPrediction> build_hlff(const nn::PoseNetModel& aef_a, const nn::PoseNetModel& aef_b,
                                        const nn::PoseNetModel& mef_a, const nn::PoseNetModel& mef_b,
                                        const nn::SampleSource& data, const LateFusionOptions& options) {
  require_lineage(aef_a, nn::Lineage::kAdditiveSewn, "HLFF");
  require_lineage(aef_b, nn::Lineage::kAdditiveSewn, "HLFF");
  require_lineage(mef_a, nn::Lineage::kMultiplicativeSewn, "HLFF");
  require_lineage(mef_b, nn::Lineage::kMultiplicativeSewn, "HLFF");
  const nn::PoseNetModel* members[] = {&aef_a, &aef_b, &mef_a, &mef_b};
  const auto predictions = predict_members(members, data);
  if (options.hlff_mode == HlffMode::kFourMembers) {
    return fuse_member_predictions(predictions, FusionOp::kAverage, options);
  }
  const auto ahl = fuse_member_predictions(std::span(predictions).first(2), FusionOp::kAverage, options);
  const auto mhl = fuse_member_predictions(std::span(predictions).last(2), FusionOp::kMultiply, options);
  std::vector<std::vector<Pose>> hybrids(2);
  for (std::size_t i = 0; i < ahl.size(); ++i) {
    hybrids[0].push_back(ahl[i].pose);
    hybrids[1].push_back(mhl[i].pose);
  }
  return fuse_member_predictions(hybrids, FusionOp::kAverage, options);
}

HybridKind classify_hybrid(std::span<const nn::PoseNetModel* const> members, FusionOp op) {
  std::size_t aef = 0, mef = 0;
  for (const nn::PoseNetModel* m : members) {
    if (m->lineage() == nn::Lineage::kAdditiveSewn) ++aef;
    if (m->lineage() == nn::Lineage::kMultiplicativeSewn) ++mef;
  }
  if (op == FusionOp::kAverage && members.size() == 2 && aef == 2) return HybridKind::kAhl;
  if (op == FusionOp::kMultiply && members.size() == 2 && mef == 2) return HybridKind::kMhl;
  if (op == FusionOp::kAverage && members.size() == 4 && aef == 2 && mef == 2) return HybridKind::kHlff;
  throw LineageMismatch("hybrid fusion: " + std::to_string(members.size()) + " members (" + std::to_string(aef) +
                        " AEF, " + std::to_string(mef) + " MEF) with op " + to_string(op) +
                        " form neither AHL, MHL nor HLFF");
}

}  // namespace posefuse::fusion
