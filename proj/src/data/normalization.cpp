#include "posefuse/data/normalization.hpp"

#include <algorithm>
#include <cmath>

#include "posefuse/error.hpp"

namespace posefuse::data {

NormalizationStats compute_normalization(std::span<const PoseRecord> records) {
  if (records.empty()) throw EmptyDataset("normalization statistics need at least one record");
  NormalizationStats s;
  const auto first = records.front().translation.as_array();
  s.min = first;
  s.max = first;
  for (const PoseRecord& r : records) {
    const auto t = r.translation.as_array();
    for (int k = 0; k < 3; ++k) {
      s.min[k] = std::min(s.min[k], t[k]);
      s.max[k] = std::max(s.max[k], t[k]);
      s.mean[k] += t[k];
    }
  }
  const double n = static_cast<double>(records.size());
  for (double& m : s.mean) m /= n;
  for (const PoseRecord& r : records) {
    const auto t = r.translation.as_array();
    for (int k = 0; k < 3; ++k) s.std[k] += (t[k] - s.mean[k]) * (t[k] - s.mean[k]);
  }
  for (double& v : s.std) v = std::sqrt(v / n);
  for (int k = 0; k < 3; ++k) s.mean[k] = std::clamp(s.mean[k], s.min[k], s.max[k]);
  return s;
}

NormalizedPose normalize_pose(const PoseRecord& record, const NormalizationStats& stats,
                              const RotationSettings& rotation) {
  NormalizedPose out;
  const auto t = record.translation.as_array();
  std::array<double, 3> n{};
  for (int k = 0; k < 3; ++k) {
    out.unscaled[k] = !(stats.std[k] > 0.0);
    n[k] = out.unscaled[k] ? t[k] - stats.mean[k] : (t[k] - stats.mean[k]) / stats.std[k];
  }
  out.translation = {n[0], n[1], n[2]};
  out.rotation = euler_to_quaternion(record.rotation, rotation.conversion, rotation.convention);
  return out;
}

PoseRecord denormalize_pose(const NormalizedPose& pose, const NormalizationStats& stats, std::string image_ref,
                            EulerConvention convention) {
  const auto n = pose.translation.as_array();
  std::array<double, 3> t{};
  for (int k = 0; k < 3; ++k) {
    const bool unscaled = pose.unscaled[k] || !(stats.std[k] > 0.0);
    t[k] = unscaled ? n[k] + stats.mean[k] : n[k] * stats.std[k] + stats.mean[k];
  }
  PoseRecord r;
  r.image_ref = std::move(image_ref);
  r.translation = {t[0], t[1], t[2]};
  r.rotation = canonicalize(quaternion_to_euler(pose.rotation.normalized(), convention).angles);
  return r;
}

std::array<double, nn::kPoseDim> to_target(const NormalizedPose& pose) {
  const Quaternion& q = pose.rotation;
  return {pose.translation.x, pose.translation.y, pose.translation.z, q.w, q.x, q.y, q.z};
}

Pose to_pose(const PoseRecord& record, const RotationSettings& rotation) {
  return {record.translation, euler_to_quaternion(record.rotation, rotation.conversion, rotation.convention)};
}

void store_translation_stats(const NormalizationStats& stats, nn::DataNormalization& target) {
  target.translation_mean = stats.mean;
  for (int k = 0; k < 3; ++k) target.translation_std[k] = stats.std[k] > 0.0 ? stats.std[k] : 1.0;
}

}  // namespace posefuse::data
