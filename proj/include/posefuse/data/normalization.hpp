#pragma once

#include <array>
#include <span>
#include <string>

#include "posefuse/data/pose_file.hpp"
#include "posefuse/geometry.hpp"
#include "posefuse/nn/model.hpp"

namespace posefuse::data {

/// Per-axis translation statistics; std uses the population (1/n) convention.
struct NormalizationStats {
  std::array<double, 3> min{0, 0, 0};
  std::array<double, 3> max{0, 0, 0};
  std::array<double, 3> mean{0, 0, 0};
  std::array<double, 3> std{0, 0, 0};
};

/// Two-pass statistics over the given records. Throws EmptyDataset.
NormalizationStats compute_normalization(std::span<const PoseRecord> records);

struct RotationSettings {
  RotationConversion conversion = RotationConversion::kStandard;
  EulerConvention convention = EulerConvention::kIntrinsicZYX;
};

struct NormalizedPose {
  Translation translation;
  Quaternion rotation;
  /// Axes whose std is zero pass through centered but unscaled.
  std::array<bool, 3> unscaled{false, false, false};
};

NormalizedPose normalize_pose(const PoseRecord& record, const NormalizationStats& stats,
                              const RotationSettings& rotation = {});

/// Inverse of normalize_pose. The rotation is decomposed with the standard
/// convention, so the round trip is exact for the standard conversion only.
PoseRecord denormalize_pose(const NormalizedPose& pose, const NormalizationStats& stats, std::string image_ref,
                            EulerConvention convention = EulerConvention::kIntrinsicZYX);

/// (tx, ty, tz, qw, qx, qy, qz) network target.
std::array<double, nn::kPoseDim> to_target(const NormalizedPose& pose);

/// Ground-truth pose in meters with its quaternion rotation.
Pose to_pose(const PoseRecord& record, const RotationSettings& rotation = {});

/// The translation part of the model-side normalization record.
void store_translation_stats(const NormalizationStats& stats, nn::DataNormalization& target);

}  // namespace posefuse::data
