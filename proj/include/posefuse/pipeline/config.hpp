#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "posefuse/data/normalization.hpp"
#include "posefuse/data/synthetic.hpp"
#include "posefuse/fusion.hpp"
#include "posefuse/nn/train.hpp"

namespace posefuse::pipeline {

/// A unimodal model to train: backbone id plus an initialization index.
/// Written "A:0"; index 0 is the primary model of that backbone.
struct MemberSpec {
  std::string backbone = "A";
  std::size_t init = 0;

  /// unimodalA, unimodalA1, ...
  std::string name() const;
  friend bool operator==(const MemberSpec&, const MemberSpec&) = default;
};

MemberSpec parse_member(std::string_view text);
std::vector<MemberSpec> parse_members(std::string_view text);
std::string format_members(const std::vector<MemberSpec>& members);

/// Either an existing dataset (directory or pose file) or a synthetic one
/// generated into the output directory.
struct DatasetSource {
  std::optional<std::filesystem::path> path;
  std::size_t synthetic_samples = 600;
  std::optional<std::uint64_t> synthetic_seed;  // defaults to the experiment seed
  data::WorldParams world;
};

struct TimingConfig {
  bool enabled = true;
  std::size_t samples = 50;
  std::size_t batch_size = 10;
  std::size_t repetitions = 3;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output = "posefuse-run";
  std::string baseline = "unimodalA";
  DatasetSource dataset;
  data::RotationSettings rotation;
  nn::TrainConfig train;
  std::vector<MemberSpec> late_members = {{"A", 0}, {"B", 0}, {"A", 1}, {"B", 1}, {"A", 2}};
  fusion::LateFusionOptions late;
  TimingConfig timing;

  /// The fusion steps the pipeline runs, derived from the settings above.
  std::vector<fusion::FusionSpec> fusion_specs() const;
};

/// Sectioned key = value text ([experiment], [dataset], [train], [fusion],
/// [timing]). Unknown sections or keys and malformed values throw Error.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string format_config(const ExperimentConfig& config);

std::string to_string(nn::TrainableScope scope);
nn::TrainableScope scope_from_string(const std::string& text);

}  // namespace posefuse::pipeline
