#ifndef COLLABTRACK_NETWORK_HPP_
#define COLLABTRACK_NETWORK_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "errors.hpp"
#include "imagery.hpp"

namespace collabtrack {

/// All randomness in the library flows through an explicitly passed engine.
using Rng = std::mt19937_64;

/// Layer widths of the classifier, input first.
inline const std::vector<int>& default_architecture() {
  static const std::vector<int> arch{kPatchSize, 256, 64, 16, 1};
  return arch;
}

/// Half-width of the uniform distribution used for fresh weights.
inline constexpr double kInitRange = 0.01;

/// Rows of a batch matrix are samples.
using BatchMatrix = Eigen::MatrixXd;

inline Eigen::MatrixXd logistic(const Eigen::MatrixXd& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Stacks patches as the rows of a K x 1024 matrix.
inline BatchMatrix stack_patches(std::span<const PatchVector> patches) {
  BatchMatrix m(static_cast<Eigen::Index>(patches.size()), kPatchSize);
  for (std::size_t k = 0; k < patches.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = patches[k].values().transpose();
  return m;
}

// ---------------------------------------------------------------------------
// Feedforward parameters

/// Weights map n_in inputs to n_out units (n_in x n_out), plus one bias per unit.
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() && a.weights == b.weights &&
           a.bias.size() == b.bias.size() && a.bias == b.bias;
  }
};

struct NetworkParams {
  std::vector<DenseLayer> layers;

  static NetworkParams zeros(std::span<const int> arch) {
    if (arch.size() < 2) throw std::invalid_argument("architecture needs at least two layers");
    NetworkParams p;
    for (std::size_t m = 1; m < arch.size(); ++m)
      p.layers.push_back({Eigen::MatrixXd::Zero(arch[m - 1], arch[m]), Eigen::VectorXd::Zero(arch[m])});
    return p;
  }

  static NetworkParams zeros_like(const NetworkParams& other) { return zeros(other.architecture()); }

  std::vector<int> architecture() const {
    std::vector<int> arch;
    if (layers.empty()) return arch;
    arch.push_back(static_cast<int>(layers.front().weights.rows()));
    for (const auto& l : layers) arch.push_back(static_cast<int>(l.weights.cols()));
    return arch;
  }

  int input_size() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weights.rows()); }

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// Throws if layer shapes do not chain or any entry is non-finite.
inline void validate(const NetworkParams& p) {
  if (p.layers.empty()) throw std::invalid_argument("network has no layers");
  for (std::size_t m = 0; m < p.layers.size(); ++m) {
    const auto& l = p.layers[m];
    if (l.bias.size() != l.weights.cols())
      throw std::invalid_argument("layer " + std::to_string(m + 1) + ": bias size does not match weight columns");
    if (m > 0 && p.layers[m - 1].weights.cols() != l.weights.rows())
      throw std::invalid_argument("layer " + std::to_string(m + 1) + ": input size does not match previous layer");
    if (!l.weights.allFinite() || !l.bias.allFinite())
      throw NumericError("layer " + std::to_string(m + 1) + " has non-finite parameters");
  }
  if (p.layers.back().weights.cols() != 1) throw std::invalid_argument("network must end in a single output unit");
}

/// Uniform(-0.01, 0.01) weights and zero biases for every layer, drawn in layer order.
inline NetworkParams init_network(std::span<const int> arch, Rng& rng) {
  NetworkParams p = NetworkParams::zeros(arch);
  std::uniform_real_distribution<double> dist(-kInitRange, kInitRange);
  for (auto& l : p.layers)
    for (Eigen::Index j = 0; j < l.weights.cols(); ++j)
      for (Eigen::Index i = 0; i < l.weights.rows(); ++i) l.weights(i, j) = dist(rng);
  return p;
}

// ---------------------------------------------------------------------------
// Restricted Boltzmann machines

struct RbmParams {
  Eigen::MatrixXd weights;  // n_visible x n_hidden
  Eigen::VectorXd visible_bias;
  Eigen::VectorXd hidden_bias;

  int visible_size() const { return static_cast<int>(weights.rows()); }
  int hidden_size() const { return static_cast<int>(weights.cols()); }

  friend bool operator==(const RbmParams& a, const RbmParams& b) {
    return a.weights == b.weights && a.visible_bias == b.visible_bias && a.hidden_bias == b.hidden_bias;
  }
};

/// Momentum buffers for CD training.
struct RbmVelocity {
  Eigen::MatrixXd weights;
  Eigen::VectorXd visible_bias;
  Eigen::VectorXd hidden_bias;

  static RbmVelocity zeros_like(const RbmParams& rbm) {
    return {Eigen::MatrixXd::Zero(rbm.weights.rows(), rbm.weights.cols()),
            Eigen::VectorXd::Zero(rbm.visible_bias.size()), Eigen::VectorXd::Zero(rbm.hidden_bias.size())};
  }
};

struct RbmConfig {
  int epochs = 10;
  int batch_size = 100;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.002;
};

inline void check_rbm_input(const RbmParams& rbm, const Eigen::MatrixXd& visible) {
  if (visible.cols() != rbm.visible_size())
    throw std::invalid_argument("RBM input has " + std::to_string(visible.cols()) + " columns, expected " +
                                std::to_string(rbm.visible_size()));
}

/// p(h = 1 | v) for each row of `visible`.
inline Eigen::MatrixXd rbm_hidden_probs(const RbmParams& rbm, const Eigen::MatrixXd& visible) {
  check_rbm_input(rbm, visible);
  Eigen::MatrixXd pre = visible * rbm.weights;
  pre.rowwise() += rbm.hidden_bias.transpose();
  return logistic(pre);
}

/// p(v = 1 | h) for each row of `hidden`.
inline Eigen::MatrixXd rbm_visible_probs(const RbmParams& rbm, const Eigen::MatrixXd& hidden) {
  if (hidden.cols() != rbm.hidden_size()) throw std::invalid_argument("RBM hidden state size mismatch");
  Eigen::MatrixXd pre = hidden * rbm.weights.transpose();
  pre.rowwise() += rbm.visible_bias.transpose();
  return logistic(pre);
}

/// Mean squared error of the deterministic v -> p(h|v) -> p(v|h) reconstruction.
inline double rbm_reconstruction_error(const RbmParams& rbm, const Eigen::MatrixXd& data) {
  const Eigen::MatrixXd recon = rbm_visible_probs(rbm, rbm_hidden_probs(rbm, data));
  return (recon - data).squaredNorm() / static_cast<double>(data.size());
}

/**
 * One contrastive-divergence (CD-1) update on a mini-batch.
 *
 * Hidden states are sampled from p(h|v) and drive the reconstruction; the
 * reconstructed visibles and the second hidden pass use probabilities. The
 * gradient estimate is (<v h^T>_data - <v h^T>_recon) / K and is applied with
 * momentum and L2 weight decay on the weights:
 *   delta <- momentum * delta - decay * lr * W + lr * grad;  W <- W + delta.
 * Returns the batch's mean squared reconstruction error.
 */
inline double rbm_cd1_step(RbmParams& rbm, RbmVelocity& vel, const Eigen::MatrixXd& batch, double learning_rate,
                           double momentum, double weight_decay, Rng& rng) {
  check_rbm_input(rbm, batch);
  if (batch.rows() < 1) throw std::invalid_argument("empty RBM batch");
  if (learning_rate < 0.0) throw std::invalid_argument("learning rate must be nonnegative");
  const double k = static_cast<double>(batch.rows());

  const Eigen::MatrixXd h0_prob = rbm_hidden_probs(rbm, batch);
  Eigen::MatrixXd h0(h0_prob.rows(), h0_prob.cols());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index j = 0; j < h0.cols(); ++j)
    for (Eigen::Index i = 0; i < h0.rows(); ++i) h0(i, j) = unit(rng) < h0_prob(i, j) ? 1.0 : 0.0;

  const Eigen::MatrixXd v1 = rbm_visible_probs(rbm, h0);
  const Eigen::MatrixXd h1 = rbm_hidden_probs(rbm, v1);

  const Eigen::MatrixXd grad_w = (batch.transpose() * h0 - v1.transpose() * h1) / k;
  const Eigen::VectorXd grad_vb = (batch - v1).colwise().mean().transpose();
  const Eigen::VectorXd grad_hb = (h0 - h1).colwise().mean().transpose();

  vel.weights = momentum * vel.weights - (weight_decay * learning_rate) * rbm.weights + learning_rate * grad_w;
  vel.visible_bias = momentum * vel.visible_bias + learning_rate * grad_vb;
  vel.hidden_bias = momentum * vel.hidden_bias + learning_rate * grad_hb;
  rbm.weights += vel.weights;
  rbm.visible_bias += vel.visible_bias;
  rbm.hidden_bias += vel.hidden_bias;

  return (v1 - batch).squaredNorm() / static_cast<double>(batch.size());
}

/// Rows of `data` gathered in the order of `order[begin, end)`.
inline Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& data, std::span<const Eigen::Index> order) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(order.size()), data.cols());
  for (std::size_t i = 0; i < order.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = data.row(order[i]);
  return out;
}

/// Shuffled index permutation of [0, n).
inline std::vector<Eigen::Index> shuffled_indices(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

/// Trains one RBM for cfg.epochs shuffled passes; returns per-epoch mean batch error.
inline std::vector<double> train_rbm(RbmParams& rbm, const Eigen::MatrixXd& data, const RbmConfig& cfg, Rng& rng) {
  if (data.rows() < 1) throw std::invalid_argument("RBM training set is empty");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be positive");
  RbmVelocity vel = RbmVelocity::zeros_like(rbm);
  std::vector<double> history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_indices(data.rows(), rng);
    double err = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t len = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
      const Eigen::MatrixXd batch = gather_rows(data, std::span(order).subspan(start, len));
      err += rbm_cd1_step(rbm, vel, batch, cfg.learning_rate, cfg.momentum, cfg.weight_decay, rng);
      ++batches;
    }
    history.push_back(err / batches);
  }
  return history;
}

/// Observer invoked with (layer index from 0, training inputs) before each RBM is trained.
using PretrainObserver = std::function<void(std::size_t, const Eigen::MatrixXd&)>;

/**
 * Greedy layer-wise pretraining. All layers are first initialized with
 * init_network; each hidden layer is then trained as an RBM on the hidden
 * probabilities of the layer below. The output layer keeps its random
 * initialization.
 */
inline NetworkParams pretrain_stack(const Eigen::MatrixXd& dataset, std::span<const int> arch, const RbmConfig& cfg,
                                    Rng& rng, const PretrainObserver& observer = {}) {
  if (dataset.rows() < 1) throw std::invalid_argument("pretraining set is empty");
  if (arch.empty() || dataset.cols() != arch.front()) throw std::invalid_argument("pretraining input size mismatch");
  NetworkParams params = init_network(arch, rng);

  Eigen::MatrixXd inputs = dataset;
  for (std::size_t m = 0; m + 1 < params.layers.size(); ++m) {
    auto& layer = params.layers[m];
    if (observer) observer(m, inputs);
    RbmParams rbm{layer.weights, Eigen::VectorXd::Zero(layer.weights.rows()), layer.bias};
    train_rbm(rbm, inputs, cfg, rng);
    layer.weights = rbm.weights;
    layer.bias = rbm.hidden_bias;
    if (m + 2 < params.layers.size()) inputs = rbm_hidden_probs(rbm, inputs);
  }
  return params;
}

inline NetworkParams pretrain_stack(std::span<const PatchVector> patches, const RbmConfig& cfg, Rng& rng) {
  return pretrain_stack(stack_patches(patches), default_architecture(), cfg, rng);
}

// ---------------------------------------------------------------------------
// Supervised classifier

struct TrainBatch {
  BatchMatrix inputs;      // K x n_0
  Eigen::VectorXd labels;  // K values in {0, 1}

  Eigen::Index size() const { return inputs.rows(); }
};

inline void check_batch(const TrainBatch& b) {
  if (b.inputs.rows() < 1) throw std::invalid_argument("training batch is empty");
  if (b.labels.size() != b.inputs.rows()) throw std::invalid_argument("inputs and labels differ in length");
}

/// Activations of every layer for one batch; activations[0] is the input.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> activations;
  std::vector<Eigen::VectorXd> mean_activations;  // per layer 1..L, mean over the batch

  Eigen::VectorXd prediction() const { return activations.back().col(0); }
};

inline ForwardTrace forward(const NetworkParams& params, const BatchMatrix& inputs) {
  if (params.layers.empty() || inputs.cols() != params.input_size())
    throw std::invalid_argument("input width " + std::to_string(inputs.cols()) + " does not match network input " +
                                std::to_string(params.input_size()));
  ForwardTrace t;
  t.activations.reserve(params.layers.size() + 1);
  t.activations.push_back(inputs);
  for (const auto& l : params.layers) {
    Eigen::MatrixXd pre = t.activations.back() * l.weights;
    pre.rowwise() += l.bias.transpose();
    t.activations.push_back(logistic(pre));
    t.mean_activations.push_back(t.activations.back().colwise().mean().transpose());
  }
  return t;
}

/// Network output f(s) for each row; no trace is kept.
inline Eigen::VectorXd predict(const NetworkParams& params, const BatchMatrix& inputs) {
  if (params.layers.empty() || inputs.cols() != params.input_size())
    throw std::invalid_argument("input width does not match network input");
  Eigen::MatrixXd h = inputs;
  for (const auto& l : params.layers) {
    Eigen::MatrixXd pre = h * l.weights;
    pre.rowwise() += l.bias.transpose();
    h = logistic(pre);
  }
  return h.col(0);
}

/// Discriminative score of each patch.
inline std::vector<double> score(const NetworkParams& params, std::span<const PatchVector> patches) {
  if (patches.empty()) return {};
  const Eigen::VectorXd p = predict(params, stack_patches(patches));
  return {p.data(), p.data() + p.size()};
}

struct LossConfig {
  double gamma = 0.0;  // weight decay inside the objective
  double eta = 1e-3;   // sparsity weight
  double rho = 0.05;   // target mean activation
};

inline constexpr double kActivationClamp = 1e-8;

inline double clamp_activation(double a) { return std::clamp(a, kActivationClamp, 1.0 - kActivationClamp); }

/// KL divergence between Bernoulli(rho) and Bernoulli(rho_hat).
inline double kl_divergence(double rho, double rho_hat) {
  rho_hat = clamp_activation(rho_hat);
  double kl = 0.0;
  if (rho > 0.0) kl += rho * std::log(rho / rho_hat);
  if (rho < 1.0) kl += (1.0 - rho) * std::log((1.0 - rho) / (1.0 - rho_hat));
  return kl;
}

struct LossTerms {
  double euclidean = 0.0;
  double decay = 0.0;
  double sparsity = 0.0;
  double total = 0.0;
};

inline void check_loss_config(const LossConfig& cfg) {
  if (!(cfg.rho > 0.0 && cfg.rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
  if (cfg.gamma < 0.0 || cfg.eta < 0.0) throw std::invalid_argument("gamma and eta must be nonnegative");
}

/// Sparsity-constrained squared loss. The KL penalty covers hidden layers only.
inline LossTerms loss(const NetworkParams& params, const TrainBatch& batch, const ForwardTrace& trace,
                      const LossConfig& cfg) {
  check_batch(batch);
  check_loss_config(cfg);
  LossTerms t;
  t.euclidean = (trace.prediction() - batch.labels).squaredNorm();
  for (const auto& l : params.layers) t.decay += l.weights.squaredNorm();
  t.decay *= cfg.gamma;
  for (std::size_t m = 0; m + 1 < trace.mean_activations.size(); ++m)
    for (double a : trace.mean_activations[m]) t.sparsity += kl_divergence(cfg.rho, a);
  t.sparsity *= cfg.eta;
  t.total = t.euclidean + t.decay + t.sparsity;
  return t;
}

inline LossTerms loss(const NetworkParams& params, const TrainBatch& batch, const LossConfig& cfg) {
  return loss(params, batch, forward(params, batch.inputs), cfg);
}

/// The objective whose exact gradient backward() returns: the squared-error
/// term carries a factor 1/2, matching the output error (l - f) f (1 - f).
inline double gradient_objective(const NetworkParams& params, const TrainBatch& batch, const LossConfig& cfg) {
  const LossTerms t = loss(params, batch, cfg);
  return 0.5 * t.euclidean + t.decay + t.sparsity;
}

/// Output-layer back-propagation error e = (l - f) f (1 - f) per sample.
inline Eigen::VectorXd output_error(const ForwardTrace& trace, const Eigen::VectorXd& labels) {
  const Eigen::ArrayXd f = trace.prediction().array();
  return ((labels.array() - f) * f * (1.0 - f)).matrix();
}

/**
 * Gradients of gradient_objective with respect to every weight and bias.
 *
 * The descent direction uses delta = -e for the output layer; hidden layers
 * propagate delta through the transposed weights, add the sparsity term
 * (eta / K) (-rho / rho_hat + (1 - rho) / (1 - rho_hat)) per unit and multiply
 * by the logistic derivative h (1 - h).
 */
inline NetworkParams backward(const NetworkParams& params, const TrainBatch& batch, const ForwardTrace& trace,
                              const LossConfig& cfg) {
  check_batch(batch);
  check_loss_config(cfg);
  if (trace.activations.size() != params.layers.size() + 1 || trace.activations.front().rows() != batch.size())
    throw std::invalid_argument("trace does not belong to this batch");

  const double k = static_cast<double>(batch.size());
  NetworkParams grads = NetworkParams::zeros_like(params);
  Eigen::MatrixXd delta = -output_error(trace, batch.labels);  // K x 1

  for (std::size_t m = params.layers.size(); m-- > 0;) {
    const Eigen::MatrixXd& below = trace.activations[m];
    grads.layers[m].weights = below.transpose() * delta + 2.0 * cfg.gamma * params.layers[m].weights;
    grads.layers[m].bias = delta.colwise().sum().transpose();
    if (m == 0) break;

    Eigen::MatrixXd back = delta * params.layers[m].weights.transpose();  // K x n_m
    if (cfg.eta > 0.0) {
      const Eigen::VectorXd& mean = trace.mean_activations[m - 1];
      Eigen::RowVectorXd sparse(mean.size());
      for (Eigen::Index i = 0; i < mean.size(); ++i) {
        const double r = clamp_activation(mean[i]);
        sparse[i] = (cfg.eta / k) * (-cfg.rho / r + (1.0 - cfg.rho) / (1.0 - r));
      }
      back.rowwise() += sparse;
    }
    delta = (back.array() * below.array() * (1.0 - below.array())).matrix();
  }
  return grads;
}

struct SgdConfig {
  double learning_rate = 0.002;
  double momentum = 0.9;
  double weight_decay = 0.002;  // multiplies lr * W inside the momentum update
};

struct OptimizerState {
  NetworkParams momentum;
  std::int64_t iteration = 0;

  static OptimizerState for_params(const NetworkParams& p) { return {NetworkParams::zeros_like(p), 0}; }
};

/// Momentum SGD with decoupled weight decay on the weights (not the biases):
///   delta <- mu * delta - decay * lr * W - lr * grad;  W <- W + delta.
inline void sgd_step(NetworkParams& params, const NetworkParams& grads, OptimizerState& opt, const SgdConfig& cfg) {
  if (grads.architecture() != params.architecture() || opt.momentum.architecture() != params.architecture())
    throw std::invalid_argument("gradient or optimizer shapes do not match parameters");
  for (std::size_t m = 0; m < params.layers.size(); ++m) {
    auto& p = params.layers[m];
    auto& d = opt.momentum.layers[m];
    const auto& g = grads.layers[m];
    d.weights = cfg.momentum * d.weights - (cfg.weight_decay * cfg.learning_rate) * p.weights - cfg.learning_rate * g.weights;
    d.bias = cfg.momentum * d.bias - cfg.learning_rate * g.bias;
    p.weights += d.weights;
    p.bias += d.bias;
  }
  ++opt.iteration;
}

struct TrainConfig {
  int epochs = 30;
  int batch_size = 100;
  SgdConfig sgd;
  LossConfig loss;
};

/// Mini-batch SGD over shuffled epochs; the last short batch is kept.
inline NetworkParams train(NetworkParams params, const TrainBatch& data, const TrainConfig& cfg, Rng& rng) {
  check_batch(data);
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be positive");
  OptimizerState opt = OptimizerState::for_params(params);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_indices(data.size(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t len = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
      const auto idx = std::span(order).subspan(start, len);
      TrainBatch mb{gather_rows(data.inputs, idx), Eigen::VectorXd(static_cast<Eigen::Index>(len))};
      for (std::size_t i = 0; i < len; ++i) mb.labels[static_cast<Eigen::Index>(i)] = data.labels[idx[i]];
      const ForwardTrace trace = forward(params, mb.inputs);
      sgd_step(params, backward(params, mb, trace, cfg.loss), opt, cfg.sgd);
    }
    for (const auto& l : params.layers)
      if (!l.weights.allFinite() || !l.bias.allFinite())
        throw NumericError("training diverged at epoch " + std::to_string(epoch + 1));
  }
  return params;
}

/// Fraction of samples whose thresholded prediction (>= 0.5) matches the label.
inline double accuracy(const NetworkParams& params, const TrainBatch& data) {
  check_batch(data);
  const Eigen::VectorXd p = predict(params, data.inputs);
  Eigen::Index hits = 0;
  for (Eigen::Index k = 0; k < p.size(); ++k) hits += ((p[k] >= 0.5) == (data.labels[k] >= 0.5)) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(p.size());
}

}  // namespace collabtrack

#endif  // COLLABTRACK_NETWORK_HPP_
