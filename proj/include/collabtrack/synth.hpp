#ifndef COLLABTRACK_SYNTH_HPP_
#define COLLABTRACK_SYNTH_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include "annotations.hpp"
#include "box.hpp"
#include "errors.hpp"
#include "imagery.hpp"

namespace collabtrack {

struct SynthConfig {
  int frames = 100;
  int width = 224;
  int height = 128;
  double target_size = 32.0;
  double velocity_x = 1.0;  // px/frame drift
  double amplitude_x = 20.0;
  double period_x = 60.0;
  double amplitude_y = 15.0;
  double period_y = 45.0;
  double noise = 0.02;  // Gaussian pixel noise sigma
  double background_level = 0.25;
  std::uint8_t occluder_byte = 64;  // dark gray, below every target pixel
  double occluder_fraction = 0.0;
  int occluder_start = 40;
  int occluder_end = 60;  // inclusive
  std::uint64_t seed = 1;
};

struct SyntheticSequence {
  std::vector<GrayFrame> frames;
  std::vector<Box> boxes;
};

/// Fixed target texture over normalized coordinates (a, b) in [0,1)^2; values in [0.12, 0.98].
/// Periods of 6-11 px on a 32 px target make misaligned or rescaled windows disagree with the template.
inline double target_texture(double a, double b) {
  constexpr double pi = std::numbers::pi;
  return 0.55 + 0.25 * std::sin(2.0 * pi * 3.0 * a + 1.0) * std::cos(2.0 * pi * 3.0 * b) +
         0.18 * std::sin(2.0 * pi * 5.0 * (a + 0.6 * b));
}

/// Upper bound of the per-frame center displacement implied by the motion parameters.
inline double max_step(const SynthConfig& c) {
  const double vx = std::abs(c.velocity_x) + c.amplitude_x * 2.0 * std::numbers::pi / c.period_x;
  const double vy = c.amplitude_y * 2.0 * std::numbers::pi / c.period_y;
  return std::hypot(vx, vy);
}

/**
 * Seeded synthetic sequence: a bright textured square moving with linear drift
 * plus sinusoidal wobble over a dark random-sinusoid background, with optional
 * per-pixel noise and a vertical occluder bar that sweeps across the target
 * during [occluder_start, occluder_end]. Frames are quantized to 8 bits so the
 * in-memory sequence matches what write_sequence stores.
 */
inline SyntheticSequence synthesize(const SynthConfig& c) {
  if (c.frames < 1 || c.width < 8 || c.height < 8 || c.target_size < 4.0)
    throw UsageError("synthetic sequence dimensions are too small");
  if (c.occluder_fraction < 0.0 || c.occluder_fraction > 1.0) throw UsageError("occluder_fraction must lie in [0,1]");
  constexpr double pi = std::numbers::pi;
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Wave {
    double fx, fy, phase;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 4; ++i) {
    const double period = 20.0 + 40.0 * unit(rng);
    const double theta = 2.0 * pi * unit(rng);
    waves.push_back({2.0 * pi * std::cos(theta) / period, 2.0 * pi * std::sin(theta) / period, 2.0 * pi * unit(rng)});
  }
  const double phase_x = 2.0 * pi * unit(rng);
  const double phase_y = 2.0 * pi * unit(rng);

  std::vector<double> background(static_cast<std::size_t>(c.width) * static_cast<std::size_t>(c.height));
  for (int y = 0; y < c.height; ++y)
    for (int x = 0; x < c.width; ++x) {
      double v = c.background_level;
      for (const auto& w : waves) v += 0.05 * std::sin(w.fx * x + w.fy * y + w.phase);
      background[static_cast<std::size_t>(y) * c.width + x] = v;
    }

  const double half = 0.5 * c.target_size;
  const double x0 = 24.0 + c.amplitude_x + half;
  const double y0 = 0.5 * c.height;
  std::normal_distribution<double> noise(0.0, 1.0);

  SyntheticSequence seq;
  for (int t = 0; t < c.frames; ++t) {
    const double cx = x0 + c.velocity_x * t + c.amplitude_x * std::sin(2.0 * pi * t / c.period_x + phase_x) -
                      c.amplitude_x * std::sin(phase_x);
    const double cy = y0 + c.amplitude_y * std::sin(2.0 * pi * t / c.period_y + phase_y) - c.amplitude_y * std::sin(phase_y);
    const Box box{cx - half, cy - half, c.target_size, c.target_size};

    // Target columns are those whose pixel centers fall inside the box.
    const int col0 = static_cast<int>(std::ceil(box.x));
    const int col1 = static_cast<int>(std::ceil(box.x + box.w)) - 1;
    int bar_left = 0, bar_right = -1;
    if (c.occluder_fraction > 0.0 && t >= c.occluder_start && t <= c.occluder_end) {
      const int ncols = col1 - col0 + 1;
      const int bar_cols = static_cast<int>(std::ceil(c.occluder_fraction * ncols - 1e-9));
      const double progress =
          c.occluder_end > c.occluder_start ? double(t - c.occluder_start) / (c.occluder_end - c.occluder_start) : 0.0;
      bar_left = col0 + static_cast<int>(std::lround(progress * (ncols - bar_cols)));
      bar_right = bar_left + bar_cols - 1;
    }

    std::vector<double> pixels(background.size());
    for (int y = 0; y < c.height; ++y)
      for (int x = 0; x < c.width; ++x) {
        const std::size_t idx = static_cast<std::size_t>(y) * c.width + x;
        if (x >= bar_left && x <= bar_right) {
          pixels[idx] = c.occluder_byte / 255.0;
          continue;
        }
        double v = background[idx];
        if (x >= box.x && x < box.x + box.w && y >= box.y && y < box.y + box.h)
          v = target_texture((x - box.x) / box.w, (y - box.y) / box.h);
        if (c.noise > 0.0) v += c.noise * noise(rng);
        pixels[idx] = to_byte(v) / 255.0;
      }
    seq.frames.emplace_back(c.width, c.height, std::move(pixels));
    seq.boxes.push_back(box);
  }
  return seq;
}

inline constexpr const char* kGroundTruthFile = "groundtruth.txt";

/// Writes frames as 0000.pgm, 0001.pgm, ... and the boxes to groundtruth.txt.
inline void write_sequence(const std::filesystem::path& dir, const SyntheticSequence& seq) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "%04zu.pgm", t);
    write_pgm(dir / name, seq.frames[t]);
  }
  std::ofstream gt(dir / kGroundTruthFile);
  if (!gt) throw DataError("cannot write ground truth in " + dir.string());
  write_boxes(gt, seq.boxes);
}

}  // namespace collabtrack

#endif  // COLLABTRACK_SYNTH_HPP_
