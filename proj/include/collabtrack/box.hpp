#ifndef COLLABTRACK_BOX_HPP_
#define COLLABTRACK_BOX_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace collabtrack {

/// Axis-aligned rectangle in continuous frame coordinates, top-left anchored.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }
  double area() const { return w * h; }

  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > 0.0 && h > 0.0;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

inline void require_valid(const Box& b) {
  if (!b.valid()) throw std::invalid_argument("box must have finite coordinates and positive extent");
}

/// Euclidean distance between the two box centers.
inline double center_error(const Box& a, const Box& b) {
  require_valid(a);
  require_valid(b);
  return std::hypot(a.center_x() - b.center_x(), a.center_y() - b.center_y());
}

/// Intersection over union of two rectangles treated as continuous regions.
inline double overlap(const Box& a, const Box& b) {
  require_valid(a);
  require_valid(b);
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

}  // namespace collabtrack

#endif  // COLLABTRACK_BOX_HPP_
