#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "posefuse/data/dataset.hpp"
#include "posefuse/data/split.hpp"
#include "posefuse/eval/report.hpp"
#include "posefuse/nn/model.hpp"
#include "posefuse/pipeline/config.hpp"

namespace posefuse::pipeline {

/// A dataset with its split and the training-split normalization.
struct PreparedData {
  data::PoseDataset dataset;
  data::DatasetSplit split;
  nn::DataNormalization norm;
};

/// Splits with `seed` and fits normalization on the training part only.
PreparedData prepare_data(data::PoseDataset dataset, std::uint64_t seed, data::AccessAudit* audit = nullptr);

/// Seeds used for a member's initialization and training.
std::uint64_t init_seed(std::uint64_t experiment_seed, const MemberSpec& member);
std::uint64_t train_seed(std::uint64_t experiment_seed, const std::string& model_name);

/// Row order of the report.
inline const std::vector<std::string> kReportRows = {"unimodalA", "unimodalB", "LF",  "AEF_A", "AEF_B",
                                                     "MEF_A",     "MEF_B",     "AHL", "MHL",   "HLFF"};

struct PipelineResult {
  std::filesystem::path output;
  /// Accuracy columns only (MAPST "-"); deterministic.
  std::vector<eval::MetricsReport> reports;
  /// Same rows with MAPST filled when timing is enabled.
  std::vector<eval::MetricsReport> timed_reports;
  std::vector<eval::ImprovementRow> improvements;
  /// Improvements including timing overhead; empty when timing is off.
  std::vector<eval::ImprovementRow> timed_improvements;
  /// The primary A and B members evaluated before training.
  std::vector<eval::MetricsReport> untrained;
  /// CRC32 (hex) of every deterministic output file, keyed by path relative
  /// to the output directory.
  std::map<std::string, std::string> checksums;
  /// Stage wall-clock seconds.
  std::map<std::string, double> stage_seconds;
  /// True when no training or normalization stage consumed a test image.
  bool audit_clean = false;
  std::filesystem::path manifest;

  const eval::MetricsReport& report(const std::string& name) const;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Runs data preparation, unimodal training, early fusion with retraining,
/// late and hybrid fusion, evaluation and reporting. A failing stage is
/// rethrown with its name prefixed, keeping the numerical/validation
/// category.
PipelineResult run_pipeline(const ExperimentConfig& config, const ProgressFn& progress = {});

}  // namespace posefuse::pipeline
