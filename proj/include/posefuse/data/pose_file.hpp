#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "posefuse/geometry.hpp"

namespace posefuse::data {

/// One ground-truth pose. Angles are canonicalized to (-pi, pi] on ingestion.
struct PoseRecord {
  std::string image_ref;
  Translation translation;
  EulerAngles rotation;

  friend bool operator==(const PoseRecord& a, const PoseRecord& b) {
    return a.image_ref == b.image_ref && a.translation.x == b.translation.x && a.translation.y == b.translation.y &&
           a.translation.z == b.translation.z && a.rotation.roll == b.rotation.roll &&
           a.rotation.pitch == b.rotation.pitch && a.rotation.yaw == b.rotation.yaw;
  }
};

/// Canonical layout: `image_ref tx ty tz roll pitch yaw`, whitespace
/// separated, radians. Blank lines and lines starting with '#' are skipped.
/// Throws ParseError carrying the 1-based line number.
std::vector<PoseRecord> parse_pose_text(std::string_view text);
std::vector<PoseRecord> load_pose_file(const std::filesystem::path& path);

/// External layouts mapped onto the canonical record.
enum class PoseLayout {
  kCanonical,    // image tx ty tz roll pitch yaw
  kAnglesFirst,  // image roll pitch yaw tx ty tz
};
/// Like load_pose_file but accepts commas as separators and the given field
/// order.
std::vector<PoseRecord> import_pose_file(const std::filesystem::path& path, PoseLayout layout);

/// Canonical text, numbers in shortest round-trip form.
std::string format_pose_records(std::span<const PoseRecord> records);
void write_pose_file(const std::filesystem::path& path, std::span<const PoseRecord> records);

}  // namespace posefuse::data
