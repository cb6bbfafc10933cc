#ifndef COLLABTRACK_SAMPLING_HPP_
#define COLLABTRACK_SAMPLING_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "box.hpp"
#include "imagery.hpp"
#include "network.hpp"

namespace collabtrack {

/// Maximum translation (pixels) and relative scale change of a jittered positive.
inline constexpr double kPositiveShift = 2.0;
inline constexpr double kPositiveScaleJitter = 0.02;

/// Negatives must overlap the target by less than this.
inline constexpr double kNegativeMaxOverlap = 0.3;
inline constexpr int kNegativeMaxTries = 100;

struct LabeledPatch {
  PatchVector patch;
  int label = 0;  // 1 positive, 0 negative
  std::size_t frame = 0;
};

/// States jittered around `state`; the first one is `state` itself.
inline std::vector<AffineState> positive_states(const AffineState& state, int count, Rng& rng) {
  if (count < 1) throw std::invalid_argument("positive count must be at least 1");
  std::uniform_real_distribution<double> shift(-kPositiveShift, kPositiveShift);
  std::uniform_real_distribution<double> zoom(1.0 - kPositiveScaleJitter, 1.0 + kPositiveScaleJitter);
  std::vector<AffineState> out{state};
  for (int i = 1; i < count; ++i) {
    AffineState s = state;
    s.cx += shift(rng);
    s.cy += shift(rng);
    s.scale *= zoom(rng);
    out.push_back(s);
  }
  return out;
}

inline std::vector<PatchVector> sample_positives(const GrayFrame& frame, const AffineState& state, BaseSize base,
                                                 int count, Rng& rng) {
  std::vector<PatchVector> out;
  for (const auto& s : positive_states(state, count, rng)) out.push_back(warp_patch(frame, s, base));
  return out;
}

/**
 * Background states from an annulus around the target: the center offset has
 * magnitude uniform in [0.5 d, 1.5 d] (d = larger side of the target box) and a
 * uniform direction, centers are clamped to the frame, and a draw is rejected
 * while its box overlaps the target by 0.3 or more. After 100 rejections the
 * least-overlapping draw seen for that slot is emitted instead.
 */
inline std::vector<AffineState> negative_states(const GrayFrame& frame, const AffineState& state, BaseSize base,
                                                int count, Rng& rng) {
  if (count < 1) throw std::invalid_argument("negative count must be at least 1");
  const Box target = state_to_box(state, base);
  const double d = std::max(target.w, target.h);
  std::uniform_real_distribution<double> radius(0.5 * d, 1.5 * d);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double max_x = frame.width() - 1.0;
  const double max_y = frame.height() - 1.0;

  std::vector<AffineState> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    AffineState best = state;
    double best_overlap = 2.0;
    for (int attempt = 0; attempt < kNegativeMaxTries; ++attempt) {
      const double r = radius(rng);
      const double a = angle(rng);
      AffineState s = state;
      s.cx = std::clamp(state.cx + r * std::cos(a), 0.0, max_x);
      s.cy = std::clamp(state.cy + r * std::sin(a), 0.0, max_y);
      const double o = overlap(state_to_box(s, base), target);
      if (o < best_overlap) {
        best = s;
        best_overlap = o;
      }
      if (o < kNegativeMaxOverlap) break;
    }
    out.push_back(best);
  }
  return out;
}

inline std::vector<PatchVector> sample_negatives(const GrayFrame& frame, const AffineState& state, BaseSize base,
                                                 int count, Rng& rng) {
  std::vector<PatchVector> out;
  for (const auto& s : negative_states(frame, state, base, count, rng)) out.push_back(warp_patch(frame, s, base));
  return out;
}

/// Frames of one annotated sequence with one ground-truth box per frame.
struct AnnotatedSequence {
  std::vector<GrayFrame> frames;
  std::vector<Box> boxes;
};

/// Positives around each ground-truth box and negatives from its surrounding annulus.
inline std::vector<LabeledPatch> harvest_offline(std::span<const AnnotatedSequence> sequences, Rng& rng,
                                                 int per_frame_pos, int per_frame_neg) {
  std::vector<LabeledPatch> out;
  for (const auto& seq : sequences) {
    if (seq.frames.size() != seq.boxes.size())
      throw std::invalid_argument("sequence needs exactly one ground-truth box per frame");
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      require_valid(seq.boxes[t]);
      const BaseSize base{seq.boxes[t].w, seq.boxes[t].h};
      const AffineState state = box_to_state(seq.boxes[t]);
      if (per_frame_pos > 0)
        for (auto& p : sample_positives(seq.frames[t], state, base, per_frame_pos, rng))
          out.push_back({std::move(p), 1, t});
      if (per_frame_neg > 0)
        for (auto& p : sample_negatives(seq.frames[t], state, base, per_frame_neg, rng))
          out.push_back({std::move(p), 0, t});
    }
  }
  return out;
}

inline TrainBatch to_train_batch(std::span<const LabeledPatch> samples) {
  TrainBatch b{BatchMatrix(static_cast<Eigen::Index>(samples.size()), kPatchSize),
               Eigen::VectorXd(static_cast<Eigen::Index>(samples.size()))};
  for (std::size_t k = 0; k < samples.size(); ++k) {
    b.inputs.row(static_cast<Eigen::Index>(k)) = samples[k].patch.values().transpose();
    b.labels[static_cast<Eigen::Index>(k)] = samples[k].label;
  }
  return b;
}

/// FIFO store of the most recent positive patches.
class PositiveReservoir {
public:
  static constexpr std::size_t kDefaultCapacity = 50;

  explicit PositiveReservoir(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

  void push(std::span<const PatchVector> patches) {
    for (const auto& p : patches) {
      items_.push_back(p);
      if (items_.size() > capacity_) items_.pop_front();
    }
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<PatchVector>& items() const { return items_; }

private:
  std::size_t capacity_;
  std::deque<PatchVector> items_;
};

inline PositiveReservoir reservoir_push(PositiveReservoir res, std::span<const PatchVector> patches) {
  res.push(patches);
  return res;
}

}  // namespace collabtrack

#endif  // COLLABTRACK_SAMPLING_HPP_
