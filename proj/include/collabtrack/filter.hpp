#ifndef COLLABTRACK_FILTER_HPP_
#define COLLABTRACK_FILTER_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "imagery.hpp"
#include "network.hpp"

namespace collabtrack {

/// Lower bound applied to scale and aspect after perturbation.
inline constexpr double kMinScale = 0.05;

/// Diagonal Gaussian motion model over (cx, cy, scale, rotation, aspect, skew).
struct MotionModel {
  std::array<double, 6> variances{6.0, 6.0, 0.01, 0.0, 0.0, 0.0};
  int particle_count = 600;

  void check() const {
    for (double v : variances)
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("motion variances must be finite and >= 0");
    if (particle_count < 1) throw std::invalid_argument("particle count must be at least 1");
  }
};

/// Draws particle_count states from N(prev, diag(variances)).
inline std::vector<AffineState> propagate(const AffineState& prev, const MotionModel& model, Rng& rng) {
  model.check();
  std::array<double, 6> sigma{};
  for (std::size_t i = 0; i < 6; ++i) sigma[i] = std::sqrt(model.variances[i]);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto base = prev.as_array();

  std::vector<AffineState> out;
  out.reserve(static_cast<std::size_t>(model.particle_count));
  for (int k = 0; k < model.particle_count; ++k) {
    auto p = base;
    for (std::size_t i = 0; i < 6; ++i)
      if (sigma[i] > 0.0) p[i] += sigma[i] * noise(rng);
    AffineState s = AffineState::from_array(p);
    s.scale = std::max(s.scale, kMinScale);
    s.aspect = std::max(s.aspect, kMinScale);
    out.push_back(s);
  }
  return out;
}

/// Per-candidate generative, discriminative, and combined scores.
struct CandidateSet {
  std::vector<AffineState> states;
  std::vector<double> generative;
  std::vector<double> discriminative;
  std::vector<double> collaborative;

  std::size_t size() const { return states.size(); }
};

/// Elementwise product of the two score lists.
inline std::vector<double> collaborative_scores(std::span<const double> generative, std::span<const double> discriminative) {
  if (generative.size() != discriminative.size())
    throw std::invalid_argument("generative and discriminative score lists differ in length");
  std::vector<double> out(generative.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = generative[k] * discriminative[k];
  return out;
}

/// Index of the largest score; the lowest index wins ties.
inline std::size_t argmax_score(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("cannot select from an empty candidate set");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k)
    if (scores[k] > scores[best]) best = k;
  return best;
}

inline std::pair<std::size_t, AffineState> select_map(const CandidateSet& candidates) {
  if (candidates.collaborative.size() != candidates.states.size())
    throw std::invalid_argument("candidate set is inconsistent");
  const std::size_t k = argmax_score(candidates.collaborative);
  return {k, candidates.states[k]};
}

}  // namespace collabtrack

#endif  // COLLABTRACK_FILTER_HPP_
