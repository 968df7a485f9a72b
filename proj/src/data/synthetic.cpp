#include "posefuse/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "posefuse/error.hpp"
#include "posefuse/util/checksum.hpp"
#include "posefuse/util/rng.hpp"

namespace posefuse::data {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFarPlane = 250.0;

struct Color {
  double r, g, b;
};

Color ground_color(double x, double z) {
  const double r = 0.5 + 0.35 * std::sin(x / 13.0) + 0.1 * std::sin((x + z) / 4.0);
  const double g = 0.5 + 0.35 * std::cos(z / 9.0) + 0.1 * std::cos((x - z) / 5.0);
  const double b = 0.45 + 0.25 * std::sin((x + 2.0 * z) / 17.0);
  const bool tile = (static_cast<long>(std::floor(x / 4.0)) + static_cast<long>(std::floor(z / 4.0))) % 2 == 0;
  const double shade = tile ? 1.0 : 0.85;
  return {r * shade, g * shade, b * shade};
}

Color sky_color(double azimuth, double elevation) {
  const double e = std::clamp(elevation, 0.0, 1.0);
  return {0.55 + 0.25 * std::cos(azimuth) - 0.2 * e, 0.65 + 0.2 * std::sin(azimuth) - 0.15 * e, 0.9 - 0.1 * e};
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

double distance_to_path(double x, double z, const WorldParams& params) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 512; ++i) {
    const double theta = 2.0 * kPi * i / 512.0;
    best = std::min(best, std::hypot(x - params.half_width * std::sin(theta),
                                     z - params.half_depth * std::sin(theta) * std::cos(theta)));
  }
  return best;
}

}  // namespace

double max_step_m(std::size_t n, const WorldParams& params) {
  const double speed = std::sqrt(params.half_width * params.half_width + params.half_depth * params.half_depth +
                                 9.0 * params.height_wobble * params.height_wobble);
  const double dtheta = 2.0 * kPi * (1.0 + 2.0 * params.phase_jitter) / static_cast<double>(n);
  return speed * dtheta;
}

RawImage render_view(const PoseRecord& pose, const std::vector<Landmark>& landmarks, const WorldParams& params) {
  const std::size_t size = params.image_size;
  const double cx = pose.translation.x, cy = pose.translation.y, cz = pose.translation.z;
  const double heading = pose.rotation.yaw;
  const double focal = (static_cast<double>(size) / 2.0) / std::tan(params.fov / 2.0);
  const double half = static_cast<double>(size) / 2.0;
  const double horizon = half - focal * std::tan(pose.rotation.pitch);
  const double tilt = std::tan(pose.rotation.roll);

  RawImage img{size, size, 3, std::vector<std::uint8_t>(size * size * 3)};
  std::vector<double> depth(size * size, kFarPlane);

  for (std::size_t v = 0; v < size; ++v) {
    for (std::size_t u = 0; u < size; ++u) {
      const double du = static_cast<double>(u) + 0.5 - half;
      const double azimuth = heading + std::atan2(du, focal);
      const double row = static_cast<double>(v) + 0.5 - (horizon + tilt * du);
      Color c;
      if (row > 0.0) {
        const double dist = std::min(kFarPlane, cy * focal / row);
        c = ground_color(cx + dist * std::sin(azimuth), cz + dist * std::cos(azimuth));
        const double fog = dist / kFarPlane;
        const Color s = sky_color(azimuth, 0.0);
        c = {c.r + (s.r - c.r) * fog, c.g + (s.g - c.g) * fog, c.b + (s.b - c.b) * fog};
        depth[v * size + u] = dist;
      } else {
        c = sky_color(azimuth, -row / focal);
      }
      std::uint8_t* p = &img.pixels[(v * size + u) * 3];
      p[0] = to_byte(c.r);
      p[1] = to_byte(c.g);
      p[2] = to_byte(c.b);
    }
  }

  for (const Landmark& lm : landmarks) {
    const double dx = lm.x - cx, dz = lm.z - cz;
    const double dist = std::hypot(dx, dz);
    if (dist < 0.5 || dist > kFarPlane) continue;
    const double bearing = std::remainder(std::atan2(dx, dz) - heading, 2.0 * kPi);
    if (std::abs(bearing) > params.fov / 2.0 + std::atan2(lm.radius, dist)) continue;
    const double u_center = half + focal * std::tan(bearing);
    const double half_width = focal * lm.radius / dist;
    const double top_rel = -focal * (lm.height - cy) / dist;
    const double bottom_rel = focal * cy / dist;
    const auto u0 = static_cast<long>(std::floor(u_center - half_width));
    const auto u1 = static_cast<long>(std::ceil(u_center + half_width));
    for (long u = std::max(0L, u0); u < std::min(static_cast<long>(size), u1); ++u) {
      const double du = static_cast<double>(u) + 0.5 - half;
      const double base = horizon + tilt * du;
      const double across = (static_cast<double>(u) + 0.5 - u_center) / half_width;
      const double shade = 0.75 + 0.25 * std::sqrt(std::max(0.0, 1.0 - across * across));
      const auto v0 = static_cast<long>(std::floor(base + top_rel));
      const auto v1 = static_cast<long>(std::ceil(base + bottom_rel));
      for (long v = std::max(0L, v0); v < std::min(static_cast<long>(size), v1); ++v) {
        const std::size_t idx = static_cast<std::size_t>(v) * size + static_cast<std::size_t>(u);
        if (depth[idx] < dist) continue;
        depth[idx] = dist;
        std::uint8_t* p = &img.pixels[idx * 3];
        p[0] = to_byte(lm.r / 255.0 * shade);
        p[1] = to_byte(lm.g / 255.0 * shade);
        p[2] = to_byte(lm.b / 255.0 * shade);
      }
    }
  }
  return img;
}

SyntheticDataset generate_synthetic(std::uint64_t seed, std::size_t n, const WorldParams& params) {
  if (n < kMinSyntheticSamples) {
    throw Error("synthetic dataset needs at least " + std::to_string(kMinSyntheticSamples) + " samples, got " +
                std::to_string(n));
  }
  SyntheticDataset ds;
  ds.seed = seed;
  ds.params = params;

  Rng world_rng(derive_seed(seed, 1));
  for (std::size_t i = 0; i < params.landmarks; ++i) {
    Landmark lm;
    do {
      lm.x = world_rng.uniform(-1.4, 1.4) * params.half_width;
      lm.z = world_rng.uniform(-1.6, 1.6) * params.half_depth;
    } while (distance_to_path(lm.x, lm.z, params) < 4.0);
    lm.radius = world_rng.uniform(0.6, 1.6);
    lm.height = world_rng.uniform(4.0, 12.0);
    lm.r = static_cast<std::uint8_t>(40 + world_rng.below(200));
    lm.g = static_cast<std::uint8_t>(40 + world_rng.below(200));
    lm.b = static_cast<std::uint8_t>(40 + world_rng.below(200));
    ds.landmarks.push_back(lm);
  }

  Rng pose_rng(derive_seed(seed, 2));
  const double step = 2.0 * kPi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = step * (static_cast<double>(i) + params.phase_jitter * pose_rng.uniform(-1.0, 1.0));
    const double x = params.half_width * std::sin(theta);
    const double z = params.half_depth * std::sin(theta) * std::cos(theta);
    const double y = params.camera_height + params.height_wobble * std::sin(3.0 * theta);
    const double dx = params.half_width * std::cos(theta);
    const double dz = params.half_depth * std::cos(2.0 * theta);
    PoseRecord r;
    r.image_ref = fmt::format("images/frame_{:04d}.png", i);
    r.translation = {x, y, z};
    const double roll = params.attitude_noise * pose_rng.normal();
    const double pitch = params.attitude_noise * pose_rng.normal();
    r.rotation = canonicalize(EulerAngles{roll, pitch, std::atan2(dx, dz)});
    ds.records.push_back(std::move(r));
  }

  ds.images.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.images[i] = render_view(ds.records[i], ds.landmarks, params);
  return ds;
}

std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticDataset& dataset) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  if (ec) throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());

  write_pose_file(dir / "poses.txt", dataset.records);
  nlohmann::ordered_json files = nlohmann::ordered_json::object();
  files["poses.txt"] = crc32_hex(crc32_file(dir / "poses.txt"));
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const fs::path path = dir / dataset.records[i].image_ref;
    write_png(path, dataset.images[i]);
    files[dataset.records[i].image_ref] = crc32_hex(crc32_file(path));
  }

  const WorldParams& p = dataset.params;
  nlohmann::ordered_json manifest;
  manifest["kind"] = "posefuse-synthetic";
  manifest["seed"] = dataset.seed;
  manifest["samples"] = dataset.records.size();
  manifest["params"] = {{"half_width", p.half_width},         {"half_depth", p.half_depth},
                        {"camera_height", p.camera_height},   {"height_wobble", p.height_wobble},
                        {"attitude_noise", p.attitude_noise}, {"phase_jitter", p.phase_jitter},
                        {"landmarks", p.landmarks},           {"image_size", p.image_size},
                        {"fov", p.fov}};
  manifest["files"] = files;

  const fs::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + manifest_path.string());
  out << manifest.dump(2) << "\n";
  return manifest_path;
}

}  // namespace posefuse::data
