#ifndef COLLABTRACK_EVAL_HPP_
#define COLLABTRACK_EVAL_HPP_

#include <cstddef>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "box.hpp"
#include "errors.hpp"

namespace collabtrack {

struct SequenceReport {
  std::vector<double> center_errors;
  std::vector<double> overlaps;
  double mean_center_error = 0.0;
  double mean_overlap = 0.0;

  std::size_t frame_count() const { return center_errors.size(); }
};

/// Per-frame center error and overlap against ground truth, plus their means.
inline SequenceReport evaluate(std::span<const Box> trajectory, std::span<const Box> ground_truth) {
  if (trajectory.size() != ground_truth.size())
    throw DataError("trajectory has " + std::to_string(trajectory.size()) + " rows but ground truth has " +
                    std::to_string(ground_truth.size()));
  if (trajectory.empty()) throw DataError("cannot evaluate an empty trajectory");
  SequenceReport r;
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    r.center_errors.push_back(center_error(trajectory[t], ground_truth[t]));
    r.overlaps.push_back(overlap(trajectory[t], ground_truth[t]));
    r.mean_center_error += r.center_errors.back();
    r.mean_overlap += r.overlaps.back();
  }
  r.mean_center_error /= static_cast<double>(trajectory.size());
  r.mean_overlap /= static_cast<double>(trajectory.size());
  return r;
}

/// `frame,center_error,overlap` rows followed by an `average,...` row.
inline void write_report(std::ostream& out, const SequenceReport& r) {
  char line[128];
  out << "frame,center_error,overlap\n";
  for (std::size_t t = 0; t < r.frame_count(); ++t) {
    std::snprintf(line, sizeof line, "%zu,%.6f,%.6f\n", t, r.center_errors[t], r.overlaps[t]);
    out << line;
  }
  std::snprintf(line, sizeof line, "average,%.6f,%.6f\n", r.mean_center_error, r.mean_overlap);
  out << line;
}

}  // namespace collabtrack

#endif  // COLLABTRACK_EVAL_HPP_
