#ifndef COLLABTRACK_TRACKER_HPP_
#define COLLABTRACK_TRACKER_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "box.hpp"
#include "errors.hpp"
#include "filter.hpp"
#include "imagery.hpp"
#include "network.hpp"
#include "sampling.hpp"
#include "subspace.hpp"

namespace collabtrack {

struct TrackerConfig {
  double mask_delta = 0.018;  // block occluded when its similarity <= delta
  double tau = 0.8;           // fine-tune when the best discriminative score falls below
  double chi = 0.8;           // skip subspace updates when the visible fraction falls below
  int update_interval = 5;
  int eigenvectors_per_block = kMaxRank;
  double forgetting = 0.95;
  MotionModel motion;
  SgdConfig sgd;
  LossConfig loss;
  int online_epochs = 20;
  int online_batch = 50;
  int positives_per_frame = 5;
  int negatives_per_finetune = 100;
  int reservoir_capacity = static_cast<int>(PositiveReservoir::kDefaultCapacity);
  std::uint64_t seed = 1;
  bool use_generative = true;  // false scores candidates with the classifier alone

  void check() const {
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in (0,1]");
    if (!(chi > 0.0 && chi <= 1.0)) throw std::invalid_argument("chi must lie in (0,1]");
    if (!(mask_delta > 0.0)) throw std::invalid_argument("mask_delta must be positive");
    if (update_interval < 1) throw std::invalid_argument("update_interval must be at least 1");
    if (eigenvectors_per_block < 0 || eigenvectors_per_block > kBlockDim)
      throw std::invalid_argument("eigenvectors_per_block out of range");
    if (!(forgetting > 0.0 && forgetting <= 1.0)) throw std::invalid_argument("forgetting must lie in (0,1]");
    if (online_epochs < 0 || online_batch < 1) throw std::invalid_argument("invalid online training schedule");
    if (positives_per_frame < 1 || negatives_per_finetune < 1 || reservoir_capacity < 1)
      throw std::invalid_argument("sample counts must be positive");
    motion.check();
  }
};

struct TrackResult {
  std::size_t frame = 0;
  AffineState state;
  Box box;
  double score = 0.0;              // collaborative score of the chosen candidate
  double max_discriminative = 0.0; // best classifier score over all candidates
  double occlusion_rate = 1.0;     // visible-block fraction of the chosen patch
  bool finetuned = false;
  bool subspace_updated = false;
};

/// Smallest side, in pixels, accepted for an initial box.
inline constexpr double kMinBoxSide = 4.0;

/**
 * Online collaborative tracker. Each step draws candidates around the previous
 * estimate, scores them with the masked block-subspace model and the
 * classifier, keeps the best product, then refreshes the occlusion mask, the
 * positive reservoir, the classifier (when its confidence is low) and, every
 * update_interval frames, the block subspaces.
 */
class Tracker {
public:
  Tracker(const GrayFrame& first, const Box& init_box, NetworkParams network, TrackerConfig cfg)
      : cfg_(std::move(cfg)),
        network_(std::move(network)),
        rng_(cfg_.seed),
        reservoir_(static_cast<std::size_t>(cfg_.reservoir_capacity)),
        mask_(OcclusionMask::all_visible()) {
    cfg_.check();
    validate(network_);
    if (network_.architecture() != default_architecture())
      throw std::invalid_argument("network architecture does not match 1024-256-64-16-1");
    if (!init_box.valid() || init_box.w < kMinBoxSide || init_box.h < kMinBoxSide)
      throw std::invalid_argument("initial box is degenerate (sides must be at least 4 px)");
    const Box frame_box{0.0, 0.0, static_cast<double>(first.width()), static_cast<double>(first.height())};
    if (overlap(init_box, frame_box) <= 0.0) throw std::invalid_argument("initial box lies outside the frame");

    width_ = first.width();
    height_ = first.height();
    base_ = BaseSize{init_box.w, init_box.h};
    state_ = box_to_state(init_box);
    subspaces_.base = base_;

    const PatchVector patch = warp_patch(first, state_, base_);
    const BlockGrid grid = partition_blocks(patch);
    for (int i = 0; i < kBlockCount; ++i) subspaces_.blocks[i] = BlockSubspace::from_sample(grid.col(i));
    reservoir_.push(sample_positives(first, state_, base_, cfg_.positives_per_frame, rng_));

    const double f = score(network_, std::span(&patch, 1)).front();
    const double g = cfg_.use_generative ? masked_score(patch, subspaces_, mask_) : 1.0;
    first_ = TrackResult{0, state_, state_to_box(state_, base_), g * f, f, mask_.rate, false, false};
  }

  const TrackResult& first_result() const { return first_; }

  TrackResult step(const GrayFrame& frame) {
    if (frame.width() != width_ || frame.height() != height_)
      throw std::invalid_argument("frame size differs from the initial frame");
    TrackResult result;
    result.frame = ++frame_index_;

    CandidateSet cand;
    cand.states = propagate(state_, cfg_.motion, rng_);
    std::vector<PatchVector> patches;
    patches.reserve(cand.states.size());
    for (const auto& s : cand.states) patches.push_back(warp_patch(frame, s, base_));
    cand.generative.resize(patches.size(), 1.0);
    if (cfg_.use_generative)
      for (std::size_t k = 0; k < patches.size(); ++k) cand.generative[k] = masked_score(patches[k], subspaces_, mask_);
    cand.discriminative = score(network_, patches);
    cand.collaborative = collaborative_scores(cand.generative, cand.discriminative);

    const auto [best, state] = select_map(cand);
    state_ = state;
    const PatchVector& target = patches[best];
    result.state = state_;
    result.box = state_to_box(state_, base_);
    result.score = cand.collaborative[best];
    result.max_discriminative = *std::max_element(cand.discriminative.begin(), cand.discriminative.end());

    // The mask computed here scores the next frame's candidates.
    mask_ = compute_mask(block_scores(target, subspaces_), cfg_.mask_delta);
    result.occlusion_rate = mask_.rate;

    reservoir_.push(sample_positives(frame, state_, base_, cfg_.positives_per_frame, rng_));

    if (result.max_discriminative < cfg_.tau) {
      finetune(frame);
      result.finetuned = true;
    }

    result.subspace_updated = accumulate_and_update(target);
    return result;
  }

  const AffineState& state() const { return state_; }
  BaseSize base() const { return base_; }
  const OcclusionMask& mask() const { return mask_; }
  const BlockSubspaceSet& subspaces() const { return subspaces_; }
  const NetworkParams& network() const { return network_; }
  const PositiveReservoir& reservoir() const { return reservoir_; }
  std::size_t buffered_frames() const { return buffer_.size(); }
  const TrackerConfig& config() const { return cfg_; }

private:
  struct BufferedFrame {
    BlockGrid blocks;
    OcclusionMask mask;
  };

  void finetune(const GrayFrame& frame) {
    const auto negatives = sample_negatives(frame, state_, base_, cfg_.negatives_per_finetune, rng_);
    std::vector<LabeledPatch> samples;
    samples.reserve(reservoir_.size() + negatives.size());
    for (const auto& p : reservoir_.items()) samples.push_back({p, 1, frame_index_});
    for (const auto& p : negatives) samples.push_back({p, 0, frame_index_});
    TrainConfig tc{cfg_.online_epochs, cfg_.online_batch, cfg_.sgd, cfg_.loss};
    network_ = train(std::move(network_), to_train_batch(samples), tc, rng_);
  }

  bool accumulate_and_update(const PatchVector& target) {
    if (mask_.rate >= cfg_.chi) {
      buffer_.push_back({partition_blocks(target), mask_});
      while (buffer_.size() > static_cast<std::size_t>(cfg_.update_interval)) buffer_.pop_front();
    }
    if (frame_index_ % static_cast<std::size_t>(cfg_.update_interval) != 0) return false;
    if (mask_.rate < cfg_.chi) {
      if (!buffer_.empty()) buffer_.pop_front();
      return false;
    }

    bool updated = false;
    for (int i = 0; i < kBlockCount; ++i) {
      Eigen::MatrixXd samples(kBlockDim, static_cast<Eigen::Index>(buffer_.size()));
      Eigen::Index n = 0;
      for (const auto& f : buffer_)
        if (f.mask.flags[i]) samples.col(n++) = f.blocks.col(i);
      if (n == 0) continue;
      subspaces_.blocks[i] =
          ipca_update(subspaces_.blocks[i], samples.leftCols(n).eval(), cfg_.forgetting, cfg_.eigenvectors_per_block);
      updated = true;
    }
    buffer_.clear();
    return updated;
  }

  TrackerConfig cfg_;
  NetworkParams network_;
  Rng rng_;
  PositiveReservoir reservoir_;
  OcclusionMask mask_;
  BlockSubspaceSet subspaces_;
  std::deque<BufferedFrame> buffer_;
  AffineState state_;
  BaseSize base_;
  int width_ = 0;
  int height_ = 0;
  std::size_t frame_index_ = 0;
  TrackResult first_;
};

/// Tracks a whole sequence; result 0 echoes the initial box.
inline std::vector<TrackResult> run(std::span<const GrayFrame> frames, const Box& init_box, NetworkParams model,
                                    const TrackerConfig& cfg) {
  if (frames.empty()) throw std::invalid_argument("sequence has no frames");
  Tracker tracker(frames.front(), init_box, std::move(model), cfg);
  std::vector<TrackResult> results{tracker.first_result()};
  for (std::size_t t = 1; t < frames.size(); ++t) results.push_back(tracker.step(frames[t]));
  return results;
}

}  // namespace collabtrack

#endif  // COLLABTRACK_TRACKER_HPP_
