#ifndef COLLABTRACK_IMAGERY_HPP_
#define COLLABTRACK_IMAGERY_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "box.hpp"
#include "errors.hpp"

namespace collabtrack {

/// Side length of the normalized observation template.
inline constexpr int kPatchSide = 32;
inline constexpr int kPatchSize = kPatchSide * kPatchSide;

/// Single-channel frame with row-major intensities in [0,1].
class GrayFrame {
public:
  GrayFrame() = default;

  GrayFrame(int width, int height, std::vector<double> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("frame dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw std::invalid_argument("pixel count does not match frame dimensions");
    for (double p : pixels_)
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("frame intensity outside [0,1]");
  }

  /// Constant-valued frame.
  static GrayFrame filled(int width, int height, double value) {
    return GrayFrame(width, height,
                     std::vector<double>(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), value));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<double>& pixels() const { return pixels_; }

  double at(int x, int y) const {
    return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
  }

  /// Bilinear sample at a continuous position; out-of-frame coordinates clamp
  /// to the nearest edge pixel.
  double sample(double x, double y) const {
    x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
    y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, width_ - 1);
    const int y1 = std::min(y0 + 1, height_ - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = at(x0, y0) + fx * (at(x1, y0) - at(x0, y0));
    const double bottom = at(x0, y1) + fx * (at(x1, y1) - at(x0, y1));
    return top + fy * (bottom - top);
  }

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// A 32x32 observation flattened row-major to 1024 values in [0,1].
class PatchVector {
public:
  PatchVector() : values_(Eigen::VectorXd::Zero(kPatchSize)) {}

  explicit PatchVector(Eigen::VectorXd values) : values_(std::move(values)) {
    if (values_.size() != kPatchSize) throw std::invalid_argument("patch must have exactly 1024 values");
    for (Eigen::Index i = 0; i < values_.size(); ++i)
      if (!(values_[i] >= 0.0 && values_[i] <= 1.0)) throw std::invalid_argument("patch value outside [0,1]");
  }

  static PatchVector filled(double value) { return PatchVector(Eigen::VectorXd::Constant(kPatchSize, value)); }

  const Eigen::VectorXd& values() const { return values_; }
  double operator()(int row, int col) const { return values_[row * kPatchSide + col]; }

  friend bool operator==(const PatchVector& a, const PatchVector& b) { return a.values_ == b.values_; }

private:
  Eigen::VectorXd values_;
};

/// Six-parameter affine pose: center, scale, rotation, aspect ratio, skew.
struct AffineState {
  double cx = 0.0;
  double cy = 0.0;
  double scale = 1.0;
  double rotation = 0.0;
  double aspect = 1.0;
  double skew = 0.0;

  bool valid() const {
    return std::isfinite(cx) && std::isfinite(cy) && std::isfinite(scale) && std::isfinite(rotation) &&
           std::isfinite(aspect) && std::isfinite(skew) && scale > 0.0 && aspect > 0.0;
  }

  std::array<double, 6> as_array() const { return {cx, cy, scale, rotation, aspect, skew}; }

  static AffineState from_array(const std::array<double, 6>& p) {
    return AffineState{p[0], p[1], p[2], p[3], p[4], p[5]};
  }

  friend bool operator==(const AffineState&, const AffineState&) = default;
};

/// Template extent in pixels; the state's scale multiplies it.
struct BaseSize {
  double width = kPatchSide;
  double height = kPatchSide;
};

/// Maps template coordinates (u, v) in [0,32) to frame coordinates. Template
/// pixel centers sit at u - 15.5 relative to the state center.
inline std::pair<double, double> affine_map(const AffineState& s, BaseSize base, double u, double v) {
  const double half = 0.5 * (kPatchSide - 1);
  const double du = u - half;
  const double dv = v - half;
  const double sx = s.scale * base.width / kPatchSide;
  const double sy = s.scale * s.aspect * base.height / kPatchSide;
  const double x = s.cx + sx * std::cos(s.rotation) * du - sy * std::sin(s.rotation + s.skew) * dv;
  const double y = s.cy + sx * std::sin(s.rotation) * du + sy * std::cos(s.rotation + s.skew) * dv;
  return {x, y};
}

/// Bilinearly resamples the frame under the state's affine warp into a patch.
inline PatchVector warp_patch(const GrayFrame& frame, const AffineState& s, BaseSize base) {
  if (!s.valid()) throw std::invalid_argument("invalid affine state");
  const double half = 0.5 * (kPatchSide - 1);
  const double sx = s.scale * base.width / kPatchSide;
  const double sy = s.scale * s.aspect * base.height / kPatchSide;
  const double ux = sx * std::cos(s.rotation);
  const double uy = sx * std::sin(s.rotation);
  const double vx = -sy * std::sin(s.rotation + s.skew);
  const double vy = sy * std::cos(s.rotation + s.skew);

  Eigen::VectorXd out(kPatchSize);
  for (int v = 0; v < kPatchSide; ++v) {
    const double dv = v - half;
    for (int u = 0; u < kPatchSide; ++u) {
      const double du = u - half;
      out[v * kPatchSide + u] = frame.sample(s.cx + ux * du + vx * dv, s.cy + uy * du + vy * dv);
    }
  }
  return PatchVector(std::move(out));
}

/// Bounding box of the four warped template corners.
inline Box state_to_box(const AffineState& s, BaseSize base) {
  constexpr double lo = -0.5;
  constexpr double hi = kPatchSide - 0.5;
  double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  bool first = true;
  for (double u : {lo, hi}) {
    for (double v : {lo, hi}) {
      const auto [x, y] = affine_map(s, base, u, v);
      if (first) {
        min_x = max_x = x;
        min_y = max_y = y;
        first = false;
      } else {
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
      }
    }
  }
  return Box{min_x, min_y, max_x - min_x, max_y - min_y};
}

/// Inverse of state_to_box for an upright, unit-scale state.
inline AffineState box_to_state(const Box& b) {
  return AffineState{b.center_x(), b.center_y(), 1.0, 0.0, 1.0, 0.0};
}

// ---------------------------------------------------------------------------
// PGM (binary P5, maxval 255)

namespace detail {

inline std::string pgm_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c = in.get();
  while (in) {
    if (c == '#') {
      while (in && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (in && !std::isspace(c) && c != '#') {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (tok.empty()) throw DataError(path + ": truncated PGM header");
  // the single whitespace byte after maxval has been consumed by the loop
  if (c == '#') in.unget();
  return tok;
}

inline int pgm_int(std::istream& in, const std::string& path, const char* field) {
  const std::string tok = pgm_token(in, path);
  int value = 0;
  for (char ch : tok) {
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      throw DataError(path + ": invalid PGM " + field + " '" + tok + "'");
    value = value * 10 + (ch - '0');
    if (value > 1 << 20) throw DataError(path + ": PGM " + field + " too large");
  }
  return value;
}

}  // namespace detail

inline GrayFrame read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  const std::string name = path.string();
  if (!in) throw DataError("cannot open " + name);
  if (detail::pgm_token(in, name) != "P5") throw DataError(name + ": not a binary PGM (expected P5)");
  const int width = detail::pgm_int(in, name, "width");
  const int height = detail::pgm_int(in, name, "height");
  const int maxval = detail::pgm_int(in, name, "maxval");
  if (width <= 0 || height <= 0) throw DataError(name + ": PGM dimensions must be positive");
  if (maxval != 255) throw DataError(name + ": unsupported PGM maxval " + std::to_string(maxval) + " (need 255)");

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<unsigned char> bytes(count);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) throw DataError(name + ": truncated PGM pixel data");

  std::vector<double> pixels(count);
  std::transform(bytes.begin(), bytes.end(), pixels.begin(), [](unsigned char b) { return b / 255.0; });
  return GrayFrame(width, height, std::move(pixels));
}

/// Quantizes intensities to bytes (round to nearest).
inline std::uint8_t to_byte(double intensity) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(intensity, 0.0, 1.0) * 255.0));
}

inline void write_pgm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw std::invalid_argument("PGM byte count does not match dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

inline void write_pgm(const std::filesystem::path& path, const GrayFrame& frame) {
  std::vector<std::uint8_t> bytes(frame.pixels().size());
  std::transform(frame.pixels().begin(), frame.pixels().end(), bytes.begin(), to_byte);
  write_pgm(path, frame.width(), frame.height(), bytes);
}

/// Reads every *.pgm file of a directory in lexicographic filename order.
inline std::vector<GrayFrame> load_sequence(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("sequence directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  if (files.empty()) throw DataError("no .pgm frames in " + dir.string());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  std::vector<GrayFrame> frames;
  frames.reserve(files.size());
  for (const auto& f : files) {
    frames.push_back(read_pgm(f));
    const auto& first = frames.front();
    const auto& last = frames.back();
    if (last.width() != first.width() || last.height() != first.height())
      throw DataError("frame dimension mismatch: " + f.filename().string() + " is " + std::to_string(last.width()) +
                      "x" + std::to_string(last.height()) + ", expected " + std::to_string(first.width()) + "x" +
                      std::to_string(first.height()));
  }
  return frames;
}

}  // namespace collabtrack

#endif  // COLLABTRACK_IMAGERY_HPP_
