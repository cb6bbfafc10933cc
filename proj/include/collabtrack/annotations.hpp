#ifndef COLLABTRACK_ANNOTATIONS_HPP_
#define COLLABTRACK_ANNOTATIONS_HPP_

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "box.hpp"
#include "errors.hpp"
#include "tracker.hpp"

namespace collabtrack {

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_real(std::string_view field, const std::string& where) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw DataError(where + ": cannot parse number '" + std::string(field) + "'");
  return value;
}

}  // namespace detail

/**
 * Reads one box per line. Accepts bare `x,y,w,h` rows (ground truth) and the
 * trajectory CSV written by write_trajectory, whose header is skipped and whose
 * columns 1-4 hold the box. Blank lines are ignored; errors cite the line.
 */
inline std::vector<Box> read_boxes(std::istream& in, const std::string& name) {
  std::vector<Box> boxes;
  std::string line;
  std::size_t lineno = 0;
  bool trajectory = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view text = detail::trim(line);
    if (text.empty()) continue;
    if (boxes.empty() && !trajectory && text.rfind("frame,", 0) == 0) {
      trajectory = true;
      continue;
    }
    const std::string where = name + " line " + std::to_string(lineno);
    const auto fields = detail::split_commas(text);
    const std::size_t offset = trajectory ? 1 : 0;
    if (fields.size() < offset + 4 || (!trajectory && fields.size() != 4))
      throw DataError(where + ": expected " + (trajectory ? "a trajectory row" : "x,y,w,h"));
    Box b{detail::parse_real(fields[offset], where), detail::parse_real(fields[offset + 1], where),
          detail::parse_real(fields[offset + 2], where), detail::parse_real(fields[offset + 3], where)};
    if (!b.valid()) throw DataError(where + ": box needs positive width and height");
    boxes.push_back(b);
  }
  return boxes;
}

inline std::vector<Box> read_boxes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_boxes(in, path.string());
}

inline void write_boxes(std::ostream& out, std::span<const Box> boxes) {
  char line[160];
  for (const auto& b : boxes) {
    std::snprintf(line, sizeof line, "%.6f,%.6f,%.6f,%.6f\n", b.x, b.y, b.w, b.h);
    out << line;
  }
}

/// Header `frame,x,y,w,h,score,occlusion_rate,finetuned`, six decimals per float.
inline void write_trajectory(std::ostream& out, std::span<const TrackResult> results) {
  char line[256];
  out << "frame,x,y,w,h,score,occlusion_rate,finetuned\n";
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n", r.frame, r.box.x, r.box.y, r.box.w,
                  r.box.h, r.score, r.occlusion_rate, r.finetuned ? 1 : 0);
    out << line;
  }
}

}  // namespace collabtrack

#endif  // COLLABTRACK_ANNOTATIONS_HPP_
