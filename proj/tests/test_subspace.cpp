#include <random>

#include <gtest/gtest.h>

#include "collabtrack/subspace.hpp"
#include "oracles.hpp"

using namespace collabtrack;

namespace {

PatchVector random_patch(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd v(kPatchSize);
  for (auto& x : v) x = u(rng);
  return PatchVector(v);
}

BlockSubspace fitted_block(int rank, std::mt19937_64& rng, double level = 0.5) {
  const Eigen::MatrixXd x = oracle::low_rank_samples(kBlockDim, 30, rank, rng, level);
  return ipca_update(BlockSubspace{}, x, 1.0);
}

}  // namespace

TEST(Blocks, ConstantPatch) {
  const BlockGrid g = partition_blocks(PatchVector::filled(0.3));
  EXPECT_TRUE((g.array() == 0.3).all());
}

TEST(Blocks, SinglePixelLandsInBlockZero) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kPatchSize);
  v[0] = 1.0;
  const BlockGrid g = partition_blocks(PatchVector(v));
  EXPECT_EQ(g(0, 0), 1.0);
  EXPECT_EQ(g.sum(), 1.0);
}

TEST(Blocks, LayoutIsRowMajorGrid) {
  std::mt19937_64 rng(1);
  const PatchVector p = random_patch(rng);
  const BlockGrid g = partition_blocks(p);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) ASSERT_EQ(g(y * 8 + x, 4 * r + c), p(8 * r + y, 8 * c + x));
}

TEST(Blocks, ReassembleInvertsPartition) {
  std::mt19937_64 rng(2);
  const PatchVector p = random_patch(rng);
  EXPECT_EQ(reassemble_blocks(partition_blocks(p)), p);
}

TEST(BlockScore, MeanAndInSpanScoreOne) {
  std::mt19937_64 rng(3);
  const BlockSubspace sub = fitted_block(4, rng);
  EXPECT_EQ(block_score(sub.mean, sub), 1.0);
  const Eigen::VectorXd in_span = sub.mean + sub.basis * Eigen::VectorXd::LinSpaced(sub.rank(), -0.1, 0.1);
  EXPECT_NEAR(block_score(in_span, sub), 1.0, 1e-14);
}

TEST(BlockScore, EmptyBasisUsesSquaredDistance) {
  BlockSubspace sub = BlockSubspace::from_sample(Eigen::VectorXd::Zero(kBlockDim));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kBlockDim);
  x[0] = 1.0;
  x[1] = 1.0;  // squared distance 2
  EXPECT_NEAR(block_score(x, sub), 0.135335283236613, 1e-14);
}

TEST(BlockScore, GrowingTheBasisNeverLowersTheScore) {
  std::mt19937_64 rng(4);
  BlockSubspace sub = fitted_block(3, rng);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(kBlockDim, 0.42);
  const double before = block_score(x, sub);
  Eigen::VectorXd extra = Eigen::VectorXd::Ones(kBlockDim);
  extra -= sub.basis * (sub.basis.transpose() * extra);
  sub.basis.conservativeResize(Eigen::NoChange, sub.rank() + 1);
  sub.basis.rightCols(1) = extra.normalized();
  EXPECT_GE(block_score(x, sub), before);
}

TEST(GlobalScore, EmptyBasisUnitDistance) {
  GlobalSubspace sub = GlobalSubspace::from_sample(Eigen::VectorXd::Constant(kPatchSize, 0.5));
  Eigen::VectorXd v = Eigen::VectorXd::Constant(kPatchSize, 0.5);
  // four deviations of 0.5, squared distance 1
  v[10] = 1.0;
  v[20] = 0.0;
  v[30] = 1.0;
  v[40] = 0.0;
  EXPECT_NEAR(global_score(PatchVector(v), sub), std::exp(-1.0), 1e-14);
  EXPECT_EQ(global_score(PatchVector::filled(0.5), sub), 1.0);
}

TEST(GenerativeScore, SumsIndependentBlockScores) {
  std::mt19937_64 rng(5);
  BlockSubspaceSet subs;
  for (auto& b : subs.blocks) b = fitted_block(4, rng);
  const PatchVector p = random_patch(rng);
  const BlockGrid g = partition_blocks(p);
  double expected = 0.0;
  for (int i = 0; i < kBlockCount; ++i) {
    const Eigen::VectorXd r = (g.col(i) - subs.blocks[i].mean) -
                              subs.blocks[i].basis * (subs.blocks[i].basis.transpose() * (g.col(i) - subs.blocks[i].mean));
    expected += std::exp(-r.squaredNorm());
  }
  EXPECT_NEAR(generative_score(p, subs), expected, 1e-12);
}

TEST(GenerativeScore, MeanPatchScoresSixteen) {
  BlockSubspaceSet subs;
  const PatchVector p = PatchVector::filled(0.25);
  const BlockGrid g = partition_blocks(p);
  for (int i = 0; i < kBlockCount; ++i) subs.blocks[i] = BlockSubspace::from_sample(g.col(i));
  EXPECT_EQ(generative_score(p, subs), 16.0);
}

TEST(Mask, Thresholds) {
  BlockScores ones;
  ones.fill(1.0);
  const OcclusionMask all = compute_mask(ones, 0.018);
  EXPECT_EQ(all.visible_count(), 16);
  EXPECT_EQ(all.rate, 1.0);

  BlockScores low;
  low.fill(0.018);
  EXPECT_EQ(compute_mask(low, 0.018).rate, 0.0);

  BlockScores mixed;
  mixed.fill(0.5);
  for (int i : {1, 6, 11, 12}) mixed[i] = 0.001;
  const OcclusionMask m = compute_mask(mixed, 0.018);
  EXPECT_EQ(m.rate, 0.75);
  for (int i = 0; i < kBlockCount; ++i) EXPECT_EQ(m.flags[i], mixed[i] > 0.018);
}

TEST(Mask, MaskedScoreDropsFlaggedBlocks) {
  BlockScores ones;
  ones.fill(1.0);
  OcclusionMask m = OcclusionMask::all_visible();
  EXPECT_EQ(masked_score(ones, m), 16.0);
  for (int i : {0, 5, 10, 15}) m.flags[i] = false;
  EXPECT_EQ(masked_score(ones, m), 12.0);
  m.flags.fill(false);
  EXPECT_EQ(masked_score(ones, m), 0.0);
}

TEST(Mask, NoisyHalfIsFlaggedAndExcluded) {
  std::mt19937_64 rng(11);
  BlockSubspaceSet subs;
  // Dark blocks: a uniform-noise block then sits far outside every subspace.
  for (auto& b : subs.blocks) b = fitted_block(4, rng, 0.2);
  BlockGrid g;
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < kBlockCount; ++i) {
    Eigen::VectorXd c(subs.blocks[i].rank());
    for (auto& x : c) x = 0.05 * n(rng);
    g.col(i) = subs.blocks[i].mean + subs.blocks[i].basis * c;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 8; ++i)
    for (int k = 0; k < kBlockDim; ++k) g(k, i) = u(rng);
  const PatchVector p = reassemble_blocks(g);

  const BlockScores s = block_scores(p, subs);
  const OcclusionMask m = compute_mask(s, 0.018);
  for (int i = 0; i < kBlockCount; ++i) EXPECT_EQ(m.flags[i], i >= 8) << "block " << i;
  EXPECT_EQ(m.rate, 0.5);
  double clean = 0.0;
  for (int i = 8; i < kBlockCount; ++i) clean += block_score(g.col(i), subs.blocks[i]);
  EXPECT_NEAR(masked_score(p, subs, m), clean, 1e-12);
  EXPECT_LE(masked_score(p, subs, m), generative_score(p, subs));
}

TEST(Mask, OccludingBlocksLeavesOthersBitwiseUnchanged) {
  std::mt19937_64 rng(12);
  BlockSubspaceSet subs;
  for (auto& b : subs.blocks) b = fitted_block(5, rng);
  const PatchVector p = random_patch(rng);
  BlockGrid g = partition_blocks(p);
  g.col(3).setZero();
  g.col(9).setOnes();
  const BlockScores before = block_scores(p, subs);
  const BlockScores after = block_scores(reassemble_blocks(g), subs);
  for (int i = 0; i < kBlockCount; ++i)
    if (i != 3 && i != 9) {
      EXPECT_EQ(before[i], after[i]);
    }
}

TEST(Ipca, IdenticalSamplesGiveEmptyBasis) {
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(kBlockDim, 0.1, 0.9);
  const Eigen::MatrixXd x = v.replicate(1, 5);
  const BlockSubspace s = ipca_update(BlockSubspace{}, x, 0.95);
  EXPECT_EQ(s.rank(), 0);
  EXPECT_NEAR((s.mean - v).norm(), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.effective_count, 5.0);
}

TEST(Ipca, SingleDirectionIsRecovered) {
  std::mt19937_64 rng(6);
  Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(kBlockDim, -1.0, 2.0).normalized();
  Eigen::MatrixXd x(kBlockDim, 6);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int j = 0; j < 6; ++j) x.col(j) = Eigen::VectorXd::Constant(kBlockDim, 0.5) + 0.05 * n(rng) * d;
  const BlockSubspace s = ipca_update(BlockSubspace{}, x, 1.0);
  ASSERT_EQ(s.rank(), 1);
  EXPECT_NEAR(std::abs(s.basis.col(0).dot(d)), 1.0, 1e-10);
}

TEST(Ipca, ChunkedUpdatesMatchBatchPca) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd x = oracle::low_rank_samples(kBlockDim, 40, 12, rng);
  BlockSubspace s;
  for (int c = 0; c < 8; ++c) s = ipca_update(s, x.middleCols(5 * c, 5).eval(), 1.0);
  const oracle::BatchPca ref = oracle::batch_pca(x);
  ASSERT_EQ(s.rank(), ref.basis.cols());
  EXPECT_LT(oracle::projector_distance(s.basis, ref.basis), 1e-6);
  EXPECT_LT((s.singular_values - ref.singular_values).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((s.mean - ref.mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_DOUBLE_EQ(s.effective_count, 40.0);
}

TEST(Ipca, BasisStaysOrthonormalAndTruncated) {
  std::mt19937_64 rng(8);
  BlockSubspace s;
  for (int c = 0; c < 12; ++c) {
    s = ipca_update(s, oracle::low_rank_samples(kBlockDim, 5, 30, rng), 0.95);
    ASSERT_LE(s.rank(), kMaxRank);
    const Eigen::MatrixXd gram = s.basis.transpose() * s.basis;
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(s.rank(), s.rank())).cwiseAbs().maxCoeff(), 1e-10);
    for (Eigen::Index k = 1; k < s.singular_values.size(); ++k)
      EXPECT_GE(s.singular_values[k - 1], s.singular_values[k]);
  }
  EXPECT_EQ(s.rank(), kMaxRank);
}

TEST(Ipca, ForgettingDecaysTheCount) {
  std::mt19937_64 rng(9);
  BlockSubspace s = ipca_update(BlockSubspace{}, oracle::low_rank_samples(kBlockDim, 5, 3, rng), 0.9);
  s = ipca_update(s, oracle::low_rank_samples(kBlockDim, 5, 3, rng), 0.9);
  EXPECT_DOUBLE_EQ(s.effective_count, 0.9 * 5.0 + 5.0);
}
