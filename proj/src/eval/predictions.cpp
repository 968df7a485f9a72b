#include "posefuse/eval/predictions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "posefuse/error.hpp"

namespace posefuse::eval {

std::string format_predictions(std::span<const PredictionRow> rows) {
  std::string out(kPredictionCsvHeader);
  out += "\n";
  for (const PredictionRow& r : rows) {
    const Pose& p = r.pose;
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.image_ref, r.source, p.t.x, p.t.y, p.t.z, p.q.w, p.q.x,
                       p.q.y, p.q.z);
  }
  return out;
}

std::vector<PredictionRow> parse_predictions(std::string_view text) {
  std::vector<PredictionRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kPredictionCsvHeader) {
        throw ParseError(line_no, "expected header '" + std::string(kPredictionCsvHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, ',');) f.push_back(tok);
    if (f.size() != 9) throw ParseError(line_no, "expected 9 fields, got " + std::to_string(f.size()));
    double v[7];
    for (int i = 0; i < 7; ++i) {
      const std::string& tok = f[static_cast<std::size_t>(i + 2)];
      char* end = nullptr;
      v[i] = std::strtod(tok.c_str(), &end);
      if (tok.empty() || end != tok.c_str() + tok.size() || !std::isfinite(v[i])) {
        throw ParseError(line_no, "not a finite number: '" + tok + "'");
      }
    }
    rows.push_back({f[0], f[1], {{v[0], v[1], v[2]}, {v[3], v[4], v[5], v[6]}}});
  }
  if (!header_seen) throw ParseError(1, "missing header");
  return rows;
}

void write_predictions(const std::filesystem::path& path, std::span<const PredictionRow> rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write predictions " + path.string());
  out << format_predictions(rows);
  if (!out) throw IoError("failed writing predictions " + path.string());
}

std::vector<PredictionRow> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read predictions " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_predictions(ss.str());
}

std::vector<PredictionRow> select_source(std::span<const PredictionRow> rows, const std::string& source) {
  std::vector<PredictionRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [&](const PredictionRow& r) { return r.source == source; });
  return out;
}

std::vector<std::string> sources(std::span<const PredictionRow> rows) {
  std::vector<std::string> out;
  for (const PredictionRow& r : rows) {
    if (std::find(out.begin(), out.end(), r.source) == out.end()) out.push_back(r.source);
  }
  return out;
}

}  // namespace posefuse::eval
