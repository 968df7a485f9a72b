#include "posefuse/eval/report.hpp"

#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "posefuse/error.hpp"

namespace posefuse::eval {

namespace {

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : "-"; }
std::string cell(const std::optional<long>& v) { return v ? std::to_string(*v) : "-"; }

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quote");
  return fields;
}

std::optional<double> parse_cell(const std::string& text, std::size_t line_no) {
  if (text == "-") return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw ParseError(line_no, "not a number: '" + text + "'");
  }
  return v;
}

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                  ReportFormat format) {
  std::string out;
  if (format == ReportFormat::kCsv) {
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + (i == 0 ? csv_field(row[i]) : row[i]);
      out += "\n";
    }
    return out;
  }
  out += "|";
  for (const auto& h : header) out += " " + h + " |";
  out += "\n|:---|";
  for (std::size_t i = 1; i < header.size(); ++i) out += "---:|";
  out += "\n";
  for (const auto& row : rows) {
    out += "|";
    for (const auto& c : row) out += " " + c + " |";
    out += "\n";
  }
  return out;
}

}  // namespace

ReportFormat report_format_from_string(const std::string& text) {
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "markdown" || text == "md") return ReportFormat::kMarkdown;
  throw Error("unknown report format '" + text + "' (expected csv or markdown)");
}

std::string render_report(std::span<const MetricsReport> reports, ReportFormat format) {
  if (reports.empty()) throw EmptyInput("report has no rows");
  std::vector<std::vector<std::string>> rows;
  for (const MetricsReport& r : reports) {
    rows.push_back({r.name, cell(r.median_et), cell(r.mean_et), cell(r.median_er), cell(r.mean_er), cell(r.mapst)});
  }
  const std::vector<std::string> header =
      format == ReportFormat::kCsv
          ? std::vector<std::string>{"model", "median_et_m", "mean_et_m", "median_er_deg", "mean_er_deg", "mapst_s"}
          : std::vector<std::string>{"Model Name",     "Median e_t (m)", "Mean e_t (m)",
                                     "Median e_r (°)", "Mean e_r (°)",   "MAPST (s)"};
  return table(header, rows, format);
}

std::vector<MetricsReport> parse_report_csv(std::string_view text) {
  std::vector<MetricsReport> out;
  std::size_t line_no = 0, start = 0;
  bool header_seen = false;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kReportCsvHeader) throw ParseError(line_no, "expected header '" + std::string(kReportCsvHeader) + "'");
      header_seen = true;
      continue;
    }
    const std::vector<std::string> f = split_csv_line(line, line_no);
    if (f.size() != 6) throw ParseError(line_no, "expected 6 fields, got " + std::to_string(f.size()));
    out.push_back({f[0], parse_cell(f[1], line_no), parse_cell(f[2], line_no), parse_cell(f[3], line_no),
                   parse_cell(f[4], line_no), parse_cell(f[5], line_no)});
  }
  if (!header_seen) throw ParseError(1, "missing header");
  return out;
}

std::vector<ImprovementRow> improvement_table(const MetricsReport& baseline, std::span<const MetricsReport> others) {
  if (!baseline.median_et || !baseline.median_er || !(*baseline.median_et > 0.0) || !(*baseline.median_er > 0.0)) {
    throw ZeroBaseline("baseline '" + baseline.name + "' needs positive median errors");
  }
  auto pct = [](double base, const std::optional<double>& model) -> std::optional<long> {
    if (!model) return std::nullopt;
    return std::lround(100.0 * (base - *model) / base);
  };
  std::vector<ImprovementRow> rows;
  for (const MetricsReport& m : others) {
    ImprovementRow row{m.name, pct(*baseline.median_et, m.median_et), pct(*baseline.median_er, m.median_er), {}};
    if (m.mapst && baseline.mapst) row.overhead_ms = (*m.mapst - *baseline.mapst) * 1000.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_improvements(std::span<const ImprovementRow> rows, ReportFormat format) {
  std::vector<std::vector<std::string>> cells;
  for (const ImprovementRow& r : rows) cells.push_back({r.name, cell(r.et_pct), cell(r.er_pct), cell(r.overhead_ms)});
  const std::vector<std::string> header =
      format == ReportFormat::kCsv
          ? std::vector<std::string>{"model", "et_improvement_pct", "er_improvement_pct", "timing_overhead_ms"}
          : std::vector<std::string>{"Model Name", "Improvement e_t (%)", "Improvement e_r (%)",
                                     "Timing Overhead (ms)"};
  return table(header, cells, format);
}

}  // namespace posefuse::eval
