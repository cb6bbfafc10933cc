#ifndef COLLABTRACK_SUBSPACE_HPP_
#define COLLABTRACK_SUBSPACE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "imagery.hpp"

namespace collabtrack {

/// Blocks per side of the observation grid, and pixels per side of a block.
inline constexpr int kGridSide = 4;
inline constexpr int kBlockSide = kPatchSide / kGridSide;
inline constexpr int kBlockCount = kGridSide * kGridSide;
inline constexpr int kBlockDim = kBlockSide * kBlockSide;

/// Cap on retained eigenvectors per subspace.
inline constexpr int kMaxRank = 16;

/// Relative singular-value floor below which a direction is treated as zero.
inline constexpr double kRankTolerance = 1e-10;

/**
 * PCA subspace of fixed ambient dimension: mean, orthonormal basis (columns),
 * singular values in descending order, and a possibly decayed sample count.
 *
 * The basis may be empty (zero columns), in which case scoring reduces to the
 * squared distance from the mean.
 */
template <int Dim>
struct Subspace {
  static constexpr int dimension = Dim;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(Dim);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(Dim, 0);
  Eigen::VectorXd singular_values = Eigen::VectorXd::Zero(0);
  double effective_count = 0.0;

  int rank() const { return static_cast<int>(basis.cols()); }

  /// Subspace seeded with a single observation: mean set, empty basis, count 1.
  static Subspace from_sample(const Eigen::VectorXd& sample) {
    if (sample.size() != Dim) throw std::invalid_argument("sample dimension mismatch");
    Subspace s;
    s.mean = sample;
    s.effective_count = 1.0;
    return s;
  }

  friend bool operator==(const Subspace& a, const Subspace& b) {
    return a.mean == b.mean && a.basis.rows() == b.basis.rows() && a.basis.cols() == b.basis.cols() &&
           a.basis == b.basis && a.singular_values.size() == b.singular_values.size() &&
           a.singular_values == b.singular_values && a.effective_count == b.effective_count;
  }
};

using BlockSubspace = Subspace<kBlockDim>;
using GlobalSubspace = Subspace<kPatchSize>;

/// Column i holds block i (row-major grid order) of a patch.
using BlockGrid = Eigen::Matrix<double, kBlockDim, kBlockCount>;
using BlockScores = std::array<double, kBlockCount>;

/// One subspace per block plus the template size they were learned at.
struct BlockSubspaceSet {
  std::array<BlockSubspace, kBlockCount> blocks;
  BaseSize base;

  friend bool operator==(const BlockSubspaceSet& a, const BlockSubspaceSet& b) { return a.blocks == b.blocks; }
};

struct OcclusionMask {
  std::array<bool, kBlockCount> flags{};
  double rate = 0.0;

  static OcclusionMask all_visible() {
    OcclusionMask m;
    m.flags.fill(true);
    m.rate = 1.0;
    return m;
  }

  int visible_count() const { return static_cast<int>(std::count(flags.begin(), flags.end(), true)); }

  friend bool operator==(const OcclusionMask&, const OcclusionMask&) = default;
};

/// Splits a patch into the 4x4 grid of 8x8 blocks. Block i = 4r + c covers
/// patch rows 8r..8r+7 and columns 8c..8c+7, flattened row-major.
inline BlockGrid partition_blocks(const PatchVector& patch) {
  BlockGrid grid;
  const auto& v = patch.values();
  for (int br = 0; br < kGridSide; ++br)
    for (int bc = 0; bc < kGridSide; ++bc) {
      const int block = br * kGridSide + bc;
      for (int r = 0; r < kBlockSide; ++r)
        for (int c = 0; c < kBlockSide; ++c)
          grid(r * kBlockSide + c, block) = v[(br * kBlockSide + r) * kPatchSide + bc * kBlockSide + c];
    }
  return grid;
}

/// Inverse of partition_blocks.
inline PatchVector reassemble_blocks(const BlockGrid& grid) {
  Eigen::VectorXd v(kPatchSize);
  for (int br = 0; br < kGridSide; ++br)
    for (int bc = 0; bc < kGridSide; ++bc) {
      const int block = br * kGridSide + bc;
      for (int r = 0; r < kBlockSide; ++r)
        for (int c = 0; c < kBlockSide; ++c)
          v[(br * kBlockSide + r) * kPatchSide + bc * kBlockSide + c] = grid(r * kBlockSide + c, block);
    }
  return PatchVector(std::move(v));
}

/// Squared norm of the part of (x - mean) not explained by the basis.
template <int Dim, typename Derived>
double reconstruction_error(const Eigen::MatrixBase<Derived>& x, const Subspace<Dim>& sub) {
  if (x.size() != Dim) throw std::invalid_argument("observation dimension mismatch");
  const Eigen::VectorXd centered = x - sub.mean;
  if (sub.rank() == 0) return centered.squaredNorm();
  const Eigen::VectorXd coeffs = sub.basis.transpose() * centered;
  return (centered - sub.basis * coeffs).squaredNorm();
}

/// Block similarity exp(-||(x-u) - U U^T (x-u)||^2), in (0,1].
template <typename Derived>
double block_score(const Eigen::MatrixBase<Derived>& block, const BlockSubspace& sub) {
  return std::exp(-reconstruction_error(block, sub));
}

/// Whole-patch similarity against a single 1024-d subspace.
inline double global_score(const PatchVector& patch, const GlobalSubspace& sub) {
  return std::exp(-reconstruction_error(patch.values(), sub));
}

inline BlockScores block_scores(const PatchVector& patch, const BlockSubspaceSet& subs) {
  const BlockGrid grid = partition_blocks(patch);
  BlockScores scores{};
  for (int i = 0; i < kBlockCount; ++i) scores[i] = block_score(grid.col(i), subs.blocks[i]);
  return scores;
}

/// Sum of the 16 block similarities.
inline double generative_score(const PatchVector& patch, const BlockSubspaceSet& subs) {
  double total = 0.0;
  for (double c : block_scores(patch, subs)) total += c;
  return total;
}

/// Flags a block as occluded (0) when its score is at or below delta.
inline OcclusionMask compute_mask(const BlockScores& scores, double delta) {
  OcclusionMask m;
  for (int i = 0; i < kBlockCount; ++i) m.flags[i] = scores[i] > delta;
  m.rate = static_cast<double>(m.visible_count()) / kBlockCount;
  return m;
}

/// Sum of block similarities over the blocks the mask keeps.
inline double masked_score(const BlockScores& scores, const OcclusionMask& mask) {
  double total = 0.0;
  for (int i = 0; i < kBlockCount; ++i)
    if (mask.flags[i]) total += scores[i];
  return total;
}

inline double masked_score(const PatchVector& patch, const BlockSubspaceSet& subs, const OcclusionMask& mask) {
  const BlockGrid grid = partition_blocks(patch);
  double total = 0.0;
  for (int i = 0; i < kBlockCount; ++i)
    if (mask.flags[i]) total += block_score(grid.col(i), subs.blocks[i]);
  return total;
}

/**
 * Incremental PCA merge of an existing subspace with a chunk of new samples
 * (columns of `samples`).
 *
 * The old model contributes forgetting * effective_count samples; its singular
 * values are scaled by the forgetting factor. A mean-shift column accounts for
 * the difference between the old and new means, so with forgetting = 1 the
 * result equals the batch PCA of all samples seen so far, up to truncation at
 * max_rank.
 */
template <int Dim>
Subspace<Dim> ipca_update(const Subspace<Dim>& sub, const Eigen::MatrixXd& samples, double forgetting,
                          int max_rank = kMaxRank) {
  if (samples.rows() != Dim) throw std::invalid_argument("sample dimension mismatch");
  if (samples.cols() < 1) throw std::invalid_argument("ipca_update needs at least one sample");
  if (!(forgetting > 0.0 && forgetting <= 1.0)) throw std::invalid_argument("forgetting factor must be in (0,1]");
  if (max_rank < 0) throw std::invalid_argument("max_rank must be nonnegative");

  const double m = static_cast<double>(samples.cols());
  const double n_old = forgetting * sub.effective_count;
  const double n_total = n_old + m;
  const Eigen::VectorXd new_mean = samples.rowwise().mean();

  Subspace<Dim> out;
  out.effective_count = n_total;
  out.mean = (n_old * sub.mean + m * new_mean) / n_total;

  // Centered new data plus the mean-shift correction column.
  const bool shift = n_old > 0.0;
  Eigen::MatrixXd augmented(Dim, samples.cols() + (shift ? 1 : 0));
  augmented.leftCols(samples.cols()) = samples.colwise() - new_mean;
  if (shift) augmented.col(samples.cols()) = std::sqrt(n_old * m / n_total) * (new_mean - sub.mean);

  const int r = sub.rank();
  const Eigen::MatrixXd projection = sub.basis.transpose() * augmented;
  Eigen::MatrixXd residual = augmented - sub.basis * projection;
  residual -= sub.basis * (sub.basis.transpose() * residual);

  // Rank decisions are relative to the raw data magnitude, so centering
  // round-off on identical samples does not create a direction.
  const double scale = std::max({augmented.norm(), r > 0 ? forgetting * sub.singular_values[0] : 0.0,
                                 std::sqrt(m) * new_mean.norm()});
  if (scale == 0.0) return out;

  // Orthonormal directions of the residual not already spanned.
  Eigen::JacobiSVD<Eigen::MatrixXd> res_svd(residual, Eigen::ComputeThinU);
  int q = 0;
  while (q < res_svd.singularValues().size() && res_svd.singularValues()[q] > kRankTolerance * scale) ++q;
  const Eigen::MatrixXd fresh = res_svd.matrixU().leftCols(q);
  if (r + q == 0) return out;

  Eigen::MatrixXd core = Eigen::MatrixXd::Zero(r + q, r + augmented.cols());
  if (r > 0) core.topLeftCorner(r, r) = (forgetting * sub.singular_values).asDiagonal();
  core.topRightCorner(r, augmented.cols()) = projection;
  if (q > 0) core.bottomRightCorner(q, augmented.cols()) = fresh.transpose() * augmented;

  Eigen::JacobiSVD<Eigen::MatrixXd> core_svd(core, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = core_svd.singularValues();
  int keep = 0;
  const double floor = sv.size() > 0 ? kRankTolerance * sv[0] : 0.0;
  while (keep < sv.size() && keep < max_rank && sv[keep] > floor) ++keep;

  Eigen::MatrixXd joint(Dim, r + q);
  joint.leftCols(r) = sub.basis;
  joint.rightCols(q) = fresh;
  out.basis = joint * core_svd.matrixU().leftCols(keep);
  out.singular_values = sv.head(keep);
  return out;
}

}  // namespace collabtrack

#endif  // COLLABTRACK_SUBSPACE_HPP_
