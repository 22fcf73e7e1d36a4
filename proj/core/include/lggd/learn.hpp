#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lggd/autodiff.hpp"
#include "lggd/geodesic.hpp"
#include "lggd/graph.hpp"

namespace lggd {

using Matrix = Eigen::MatrixXd;

/// Initial-condition network: ReLU hidden layers, softplus output with one
/// unit per class. weight is (in x out), bias is (1 x out).
struct MlpParams {
  struct Layer {
    Matrix weight;
    Matrix bias;
  };
  std::vector<Layer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.rows()); }
  std::size_t output_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.cols()); }
  std::size_t num_hidden() const { return layers.empty() ? 0 : layers.size() - 1; }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static MlpParams init(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t output_dim,
                        std::uint64_t seed);
  void validate() const;
};

/// One mask per hidden layer, each (n x hidden_width), already scaled by
/// 1/(1 - p) on kept units.
using DropoutMasks = std::vector<Matrix>;

DropoutMasks sample_dropout_masks(const MlpParams& mlp, std::size_t n_rows, double rate, std::uint64_t seed);

/// n x K matrix of initial distances; column k is the class-k field.
Matrix mlp_forward(const MlpParams& params, const Matrix& features, const DropoutMasks* masks = nullptr);

enum class BoundaryLossKind { CrossEntropy, SquaredSelfDistance };

struct TrainConfig {
  std::size_t epochs = 150;
  double learning_rate = 0.01;
  double weight_decay = 0.0005;
  double dropout = 0.2;
  std::vector<std::size_t> hidden{64};
  bool learn_rho = false;
  BoundaryLossKind loss = BoundaryLossKind::CrossEntropy;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Mean over boundary nodes x and snapshots t of
///   CrossEntropy:        -log softmax_k(-f^k(x,t))[label(x)]
///   SquaredSelfDistance: f^{label(x)}(x,t)^2
double boundary_loss(const DistanceField& field, const BoundarySpec& boundary,
                     BoundaryLossKind kind = BoundaryLossKind::CrossEntropy);

/// Forward record of the fixed-step RK4 integration for all classes, with
/// the reverse pass. Snapshot output layout matches FeatureMatrix:
/// column k*T + t holds f^k(., t).
class UnrolledIntegrator {
 public:
  UnrolledIntegrator(const Graph& g, const BoundarySpec& boundary, std::vector<double> rho, SolverConfig cfg);

  /// phi0 is n x K. Replaces any previous record.
  Matrix forward(const Matrix& phi0);
  /// Given dL/d(snapshots), returns dL/dphi0 and accumulates dL/drho into
  /// rho_grad when non-null.
  Matrix backward(const Matrix& snapshot_grad, std::vector<double>* rho_grad) const;

  std::size_t num_snapshots() const noexcept { return steps_.size(); }

 private:
  const Graph* g_;
  const BoundarySpec* boundary_;
  std::vector<double> rho_;
  SolverConfig cfg_;
  std::vector<std::size_t> steps_;
  std::vector<std::vector<char>> frozen_;
  std::vector<std::vector<double>> stages_;  // per class, 4n doubles per step
};

struct LossAndGradients {
  double loss = 0.0;
  /// Same order as MlpParams::layers: weight then bias per layer.
  std::vector<Matrix> mlp;
  /// Present only when training the potential; dL/dlog_rho per node.
  std::optional<std::vector<double>> log_rho;
};

/// Boundary loss of the unclamped integration started from phi0 = MLP(features)
/// on every node, with exact gradients of the discrete computation.
LossAndGradients loss_and_gradients(const Graph& g, const BoundarySpec& boundary, const Matrix& features,
                                    const MlpParams& mlp, const PotentialParams& pot, const SolverConfig& solver,
                                    const TrainConfig& train, const DropoutMasks* masks = nullptr);

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::size_t step = 0;
};

/// Adam with decoupled weight decay:
///   p <- p - lr*wd*p - lr * m_hat / (sqrt(v_hat) + eps)
void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state, const AdamConfig& cfg);

struct Pipeline1Result {
  MlpParams mlp;
  PotentialParams potential;
  std::vector<double> loss_history;
};

Pipeline1Result train_pipeline1(const Graph& g, const BoundarySpec& boundary, const Matrix& features,
                                const PotentialParams& initial_potential, const SolverConfig& solver,
                                const TrainConfig& train);

struct Checkpoint {
  MlpParams mlp;
  PotentialParams potential;
  SolverConfig solver;
  TrainConfig train;
  std::uint64_t seed = 0;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lggd
