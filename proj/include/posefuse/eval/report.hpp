#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace posefuse::eval {

/// One row of the results table. Missing fields render as "-".
struct MetricsReport {
  std::string name;
  std::optional<double> median_et;  // m
  std::optional<double> mean_et;    // m
  std::optional<double> median_er;  // deg
  std::optional<double> mean_er;    // deg
  std::optional<double> mapst;      // s

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

enum class ReportFormat { kCsv, kMarkdown };
ReportFormat report_format_from_string(const std::string& text);

inline constexpr std::string_view kReportCsvHeader = "model,median_et_m,mean_et_m,median_er_deg,mean_er_deg,mapst_s";

/// Columns: model, median e_t, mean e_t, median e_r, mean e_r, MAPST, with
/// three decimals. Throws EmptyInput for no rows.
std::string render_report(std::span<const MetricsReport> reports, ReportFormat format);

/// Reads the CSV form back. Throws ParseError.
std::vector<MetricsReport> parse_report_csv(std::string_view text);

/// Change against a baseline: positive percentages are error reductions.
struct ImprovementRow {
  std::string name;
  std::optional<long> et_pct;
  std::optional<long> er_pct;
  std::optional<double> overhead_ms;

  friend bool operator==(const ImprovementRow&, const ImprovementRow&) = default;
};

/// round(100 * (baseline - model) / baseline) on the median errors, and
/// (model - baseline) MAPST in ms. Throws ZeroBaseline unless both baseline
/// medians are present and positive.
std::vector<ImprovementRow> improvement_table(const MetricsReport& baseline, std::span<const MetricsReport> others);

std::string render_improvements(std::span<const ImprovementRow> rows, ReportFormat format);

}  // namespace posefuse::eval
