#include "posefuse/data/pose_file.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "posefuse/error.hpp"

namespace posefuse::data {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read pose file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<PoseRecord> parse(std::string_view text, PoseLayout layout, bool allow_commas) {
  std::vector<PoseRecord> records;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    start = end + 1;
    ++line_no;

    if (allow_commas) std::replace(line.begin(), line.end(), ',', ' ');
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.size() != 7) {
      throw ParseError(line_no, "expected 7 fields (image_ref tx ty tz roll pitch yaw), got " +
                                    std::to_string(tokens.size()));
    }
    double v[6];
    for (int i = 0; i < 6; ++i) {
      const std::string& tok = tokens[static_cast<std::size_t>(i + 1)];
      char* stop = nullptr;
      v[i] = std::strtod(tok.c_str(), &stop);
      if (stop != tok.c_str() + tok.size() || !std::isfinite(v[i])) {
        throw ParseError(line_no, "field " + std::to_string(i + 2) + " is not a finite number: '" + tok + "'");
      }
    }
    PoseRecord r;
    r.image_ref = tokens[0];
    if (layout == PoseLayout::kCanonical) {
      r.translation = {v[0], v[1], v[2]};
      r.rotation = {v[3], v[4], v[5]};
    } else {
      r.rotation = {v[0], v[1], v[2]};
      r.translation = {v[3], v[4], v[5]};
    }
    r.rotation = canonicalize(r.rotation);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

std::vector<PoseRecord> parse_pose_text(std::string_view text) { return parse(text, PoseLayout::kCanonical, false); }

std::vector<PoseRecord> load_pose_file(const std::filesystem::path& path) { return parse_pose_text(read_text(path)); }

std::vector<PoseRecord> import_pose_file(const std::filesystem::path& path, PoseLayout layout) {
  return parse(read_text(path), layout, true);
}

std::string format_pose_records(std::span<const PoseRecord> records) {
  std::string out;
  for (const PoseRecord& r : records) {
    out += fmt::format("{} {} {} {} {} {} {}\n", r.image_ref, r.translation.x, r.translation.y, r.translation.z,
                       r.rotation.roll, r.rotation.pitch, r.rotation.yaw);
  }
  return out;
}

void write_pose_file(const std::filesystem::path& path, std::span<const PoseRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write pose file " + path.string());
  out << format_pose_records(records);
  if (!out) throw IoError("failed writing pose file " + path.string());
}

}  // namespace posefuse::data
