#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "posefuse/data/image.hpp"
#include "posefuse/data/pose_file.hpp"

namespace posefuse::data {

/// Synthetic world: a camera driving a figure-eight over a textured ground
/// plane dotted with coloured pillars. The path lies in the x-z plane,
/// x = half_width * sin(theta), z = half_depth * sin(theta) * cos(theta),
/// with y the camera height.
struct WorldParams {
  double half_width = 40.0;
  double half_depth = 20.0;
  double camera_height = 1.6;
  /// Amplitude of the smooth height undulation, y += amp * sin(3 theta).
  double height_wobble = 0.1;
  /// Std of the roll and pitch noise, radians.
  double attitude_noise = 0.02;
  /// Each sample's path parameter is shifted by up to this fraction of a
  /// step.
  double phase_jitter = 0.2;
  std::size_t landmarks = 24;
  std::size_t image_size = 260;
  /// Horizontal field of view, radians.
  double fov = 1.4;
};

struct Landmark {
  double x, z, radius, height;
  std::uint8_t r, g, b;
};

struct SyntheticDataset {
  std::uint64_t seed = 0;
  WorldParams params;
  std::vector<Landmark> landmarks;
  std::vector<PoseRecord> records;
  std::vector<RawImage> images;
};

inline constexpr std::size_t kMinSyntheticSamples = 8;

/// Upper bound on the distance between consecutive poses for n samples.
double max_step_m(std::size_t n, const WorldParams& params);

/// Deterministic per seed. Records are in path order and reference
/// images/frame_NNNN.png. Throws Error when n < 8.
SyntheticDataset generate_synthetic(std::uint64_t seed, std::size_t n, const WorldParams& params = {});

/// Renders the view from `pose`.
RawImage render_view(const PoseRecord& pose, const std::vector<Landmark>& landmarks, const WorldParams& params);

/// Writes poses.txt, images/ and manifest.json (seed, params and CRC32 of
/// every file). Returns the manifest path.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticDataset& dataset);

}  // namespace posefuse::data
