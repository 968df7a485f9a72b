#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "posefuse/geometry.hpp"

namespace posefuse::eval {

/// One predicted pose. `source` is a model name, or "fused" for the late
/// fusion of every model in the file.
struct PredictionRow {
  std::string image_ref;
  std::string source;
  Pose pose;
};

inline constexpr std::string_view kPredictionCsvHeader = "image_ref,source,tx,ty,tz,qw,qx,qy,qz";

/// Numbers in shortest round-trip form.
std::string format_predictions(std::span<const PredictionRow> rows);
std::vector<PredictionRow> parse_predictions(std::string_view text);

void write_predictions(const std::filesystem::path& path, std::span<const PredictionRow> rows);
std::vector<PredictionRow> read_predictions(const std::filesystem::path& path);

/// Rows of one source, in file order.
std::vector<PredictionRow> select_source(std::span<const PredictionRow> rows, const std::string& source);
/// Distinct sources in order of first appearance.
std::vector<std::string> sources(std::span<const PredictionRow> rows);

}  // namespace posefuse::eval
