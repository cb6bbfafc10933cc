#include <random>

#include <gtest/gtest.h>

#include "collabtrack/network.hpp"
#include "oracles.hpp"

using namespace collabtrack;

namespace {

NetworkParams random_params(std::span<const int> arch, double sd, Rng& rng) {
  NetworkParams p = NetworkParams::zeros(arch);
  std::normal_distribution<double> n(0.0, sd);
  for (auto& l : p.layers) {
    for (Eigen::Index k = 0; k < l.weights.size(); ++k) l.weights.data()[k] = n(rng);
    for (auto& b : l.bias) b = n(rng);
  }
  return p;
}

TrainBatch random_batch(int k, int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TrainBatch b{Eigen::MatrixXd(k, n), Eigen::VectorXd(k)};
  for (Eigen::Index i = 0; i < b.inputs.size(); ++i) b.inputs.data()[i] = u(rng);
  for (int i = 0; i < k; ++i) b.labels[i] = i % 2;
  return b;
}

const std::vector<int> kSmall{16, 8, 4, 1};

}  // namespace

TEST(Logistic, KnownValues) {
  EXPECT_EQ(logistic(0.0), 0.5);
  EXPECT_NEAR(logistic(2.0), 0.880797077977882, 1e-15);
  EXPECT_NEAR(logistic(-2.0), 1.0 - 0.880797077977882, 1e-15);
}

TEST(Init, ShapesAndRange) {
  Rng rng(1);
  const NetworkParams p = init_network(default_architecture(), rng);
  ASSERT_EQ(p.architecture(), default_architecture());
  for (const auto& l : p.layers) {
    EXPECT_LE(l.weights.cwiseAbs().maxCoeff(), kInitRange);
    EXPECT_TRUE(l.bias.isZero());
  }
  Rng again(1);
  EXPECT_EQ(init_network(default_architecture(), again), p);
}

TEST(Forward, OutputMatchesHandComputation) {
  NetworkParams p = NetworkParams::zeros(std::vector<int>{2, 1});
  p.layers[0].weights << 1.0, -1.0;
  p.layers[0].bias << 0.5;
  Eigen::MatrixXd x(1, 2);
  x << 2.0, 0.5;
  EXPECT_NEAR(predict(p, x)[0], logistic(2.0), 1e-15);
  const ForwardTrace t = forward(p, x);
  EXPECT_EQ(t.prediction()[0], predict(p, x)[0]);
}

TEST(Forward, RejectsWrongInputWidth) {
  Rng rng(2);
  const NetworkParams p = init_network(kSmall, rng);
  EXPECT_THROW(predict(p, Eigen::MatrixXd::Zero(3, 5)), std::invalid_argument);
}

TEST(Loss, KlDivergenceValues) {
  EXPECT_NEAR(kl_divergence(0.05, 0.5), 0.05 * std::log(0.1) + 0.95 * std::log(1.9), 1e-15);
  EXPECT_NEAR(kl_divergence(0.05, 0.5), 0.494632, 1e-6);
  EXPECT_EQ(kl_divergence(0.05, 0.05), 0.0);
  EXPECT_TRUE(std::isfinite(kl_divergence(0.05, 0.0)));
  EXPECT_TRUE(std::isfinite(kl_divergence(0.05, 1.0)));
}

TEST(Loss, TermsAddUp) {
  Rng rng(3);
  const NetworkParams p = random_params(kSmall, 0.5, rng);
  const TrainBatch b = random_batch(5, 16, rng);
  const LossConfig cfg{0.01, 0.1, 0.05};
  const LossTerms t = loss(p, b, cfg);
  const ForwardTrace tr = forward(p, b.inputs);
  EXPECT_NEAR(t.euclidean, (tr.prediction() - b.labels).squaredNorm(), 1e-14);
  double decay = 0.0;
  for (const auto& l : p.layers) decay += l.weights.squaredNorm();
  EXPECT_NEAR(t.decay, 0.01 * decay, 1e-14);
  double kl = 0.0;
  for (int m = 0; m < 2; ++m)
    for (double a : tr.mean_activations[m]) kl += kl_divergence(0.05, a);
  EXPECT_NEAR(t.sparsity, 0.1 * kl, 1e-14);
  EXPECT_NEAR(t.total, t.euclidean + t.decay + t.sparsity, 1e-14);
}

TEST(Backward, MatchesFiniteDifferences) {
  Rng rng(4);
  const NetworkParams p = random_params(kSmall, 0.5, rng);
  const TrainBatch b = random_batch(5, 16, rng);
  const LossConfig cfg{0.01, 0.1, 0.05};
  const NetworkParams analytic = backward(p, b, forward(p, b.inputs), cfg);
  const NetworkParams numeric = oracle::numeric_gradient(p, b, cfg, 1e-5);
  EXPECT_LT(oracle::max_relative_error(analytic, numeric), 1e-5);
}

TEST(Backward, MatchesFiniteDifferencesWithoutRegularizers) {
  Rng rng(5);
  const NetworkParams p = random_params(std::vector<int>{6, 5, 1}, 0.7, rng);
  const TrainBatch b = random_batch(4, 6, rng);
  const LossConfig cfg{0.0, 0.0, 0.05};
  const NetworkParams analytic = backward(p, b, forward(p, b.inputs), cfg);
  EXPECT_LT(oracle::max_relative_error(analytic, oracle::numeric_gradient(p, b, cfg, 1e-5)), 1e-5);
}

TEST(Sgd, FirstStepFromRest) {
  NetworkParams p = NetworkParams::zeros(std::vector<int>{1, 1});
  p.layers[0].weights(0, 0) = 1.0;
  p.layers[0].bias[0] = 1.0;
  NetworkParams g = NetworkParams::zeros_like(p);
  g.layers[0].weights(0, 0) = 0.5;
  g.layers[0].bias[0] = 0.5;
  OptimizerState opt = OptimizerState::for_params(p);
  sgd_step(p, g, opt, SgdConfig{0.002, 0.9, 0.002});
  // delta = -0.002*0.002*1 - 0.002*0.5 = -0.001004
  EXPECT_NEAR(p.layers[0].weights(0, 0), 1.0 - 0.001004, 1e-15);
  EXPECT_NEAR(p.layers[0].bias[0], 1.0 - 0.001, 1e-15);
  EXPECT_EQ(opt.iteration, 1);
}

TEST(Sgd, MomentumCarriesOver) {
  NetworkParams p = NetworkParams::zeros(std::vector<int>{1, 1});
  NetworkParams g = NetworkParams::zeros_like(p);
  g.layers[0].weights(0, 0) = 1.0;
  OptimizerState opt = OptimizerState::for_params(p);
  const SgdConfig cfg{0.1, 0.9, 0.0};
  sgd_step(p, g, opt, cfg);
  sgd_step(p, g, opt, cfg);
  // deltas -0.1 then 0.9 * -0.1 - 0.1
  EXPECT_NEAR(p.layers[0].weights(0, 0), -0.1 - 0.19, 1e-15);
}

TEST(Train, LearnsTwoSeparatedBlobs) {
  Rng rng(6);
  std::normal_distribution<double> n(0.0, 0.05);
  TrainBatch data{Eigen::MatrixXd(200, 16), Eigen::VectorXd(200)};
  for (int k = 0; k < 200; ++k) {
    const double centre = k % 2 ? 0.8 : 0.2;
    for (int j = 0; j < 16; ++j) data.inputs(k, j) = std::clamp(centre + n(rng), 0.0, 1.0);
    data.labels[k] = k % 2;
  }
  NetworkParams p = init_network(kSmall, rng);
  const TrainConfig cfg{300, 20, SgdConfig{0.5, 0.9, 0.0}, LossConfig{0.0, 0.0, 0.05}};
  const double before = loss(p, data, cfg.loss).total;
  p = train(std::move(p), data, cfg, rng);
  EXPECT_LT(loss(p, data, cfg.loss).total, 0.1 * before);
  EXPECT_EQ(accuracy(p, data), 1.0);
}

TEST(Train, DivergenceIsANumericError) {
  Rng rng(7);
  NetworkParams p = random_params(kSmall, 0.5, rng);
  const TrainBatch b = random_batch(8, 16, rng);
  const TrainConfig cfg{5, 8, SgdConfig{std::numeric_limits<double>::infinity(), 0.9, 0.0}, LossConfig{}};
  EXPECT_THROW(train(std::move(p), b, cfg, rng), NumericError);
}

TEST(Train, SparsityDrivesMeanActivationToTarget) {
  Rng rng(8);
  const std::vector<int> arch{16, 10, 6, 1};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TrainBatch data{Eigen::MatrixXd(100, 16), Eigen::VectorXd(100)};
  for (Eigen::Index i = 0; i < data.inputs.size(); ++i) data.inputs.data()[i] = u(rng);
  for (int k = 0; k < 100; ++k) data.labels[k] = u(rng) < 0.5 ? 1.0 : 0.0;
  NetworkParams p = init_network(arch, rng);
  const TrainConfig cfg{100, 10, SgdConfig{0.1, 0.9, 0.0}, LossConfig{0.0, 1.0, 0.05}};
  p = train(std::move(p), data, cfg, rng);
  const ForwardTrace t = forward(p, data.inputs);
  for (int m = 0; m < 2; ++m)
    for (double a : t.mean_activations[m]) EXPECT_NEAR(a, 0.05, 0.02) << "layer " << m + 1;
}

TEST(Rbm, ProbabilitiesMatchLogistic) {
  RbmParams rbm{Eigen::MatrixXd::Constant(2, 1, 1.0), Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(1, -1.0)};
  Eigen::MatrixXd v(1, 2);
  v << 1.0, 1.0;
  EXPECT_NEAR(rbm_hidden_probs(rbm, v)(0, 0), logistic(1.0), 1e-15);
  Eigen::MatrixXd h(1, 1);
  h << 1.0;
  EXPECT_NEAR(rbm_visible_probs(rbm, h)(0, 1), logistic(1.0), 1e-15);
}

TEST(Rbm, Cd1ReducesBarsReconstructionError) {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd bars = oracle::bars_dataset(500, rng);
  RbmParams rbm{Eigen::MatrixXd::Zero(64, 32), Eigen::VectorXd::Zero(64), Eigen::VectorXd::Zero(32)};
  std::uniform_real_distribution<double> u(-kInitRange, kInitRange);
  for (Eigen::Index i = 0; i < rbm.weights.size(); ++i) rbm.weights.data()[i] = u(rng);
  const double before = rbm_reconstruction_error(rbm, bars);
  train_rbm(rbm, bars, RbmConfig{10, 10, 0.002, 0.9, 0.002}, rng);
  EXPECT_LE(rbm_reconstruction_error(rbm, bars), 0.7 * before);
}

TEST(Pretrain, ObserverSeesEachHiddenLayerInput) {
  Rng rng(10);
  const Eigen::MatrixXd data = Eigen::MatrixXd::Constant(20, 16, 0.5);
  std::vector<Eigen::Index> widths;
  const NetworkParams p = pretrain_stack(data, kSmall, RbmConfig{1, 10, 0.01, 0.5, 0.0}, rng,
                                         [&](std::size_t, const Eigen::MatrixXd& in) { widths.push_back(in.cols()); });
  EXPECT_EQ(widths, (std::vector<Eigen::Index>{16, 8}));
  EXPECT_EQ(p.architecture(), kSmall);
}
