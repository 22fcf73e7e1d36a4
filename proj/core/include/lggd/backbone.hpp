#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lggd/autodiff.hpp"
#include "lggd/graph.hpp"
#include "lggd/split.hpp"

namespace lggd {

struct GcnConfig {
  std::size_t hidden = 32;
  double dropout = 0.5;
  double learning_rate = 0.01;
  double weight_decay = 1e-6;
  std::size_t max_epochs = 5000;
  std::size_t patience = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

/// D^-1/2 (A + I) D^-1/2 with D the degree of A + I.
ad::SparseMatrix normalize_adjacency(const Graph& g);

struct GcnModel {
  Eigen::MatrixXd w0;
  Eigen::MatrixXd b0;
  Eigen::MatrixXd w1;
  Eigen::MatrixXd b1;

  std::size_t num_classes() const { return static_cast<std::size_t>(w1.cols()); }
};

/// Row-stochastic class probabilities of the two-layer GCN (no dropout).
Eigen::MatrixXd gcn_predict(const GcnModel& model, const ad::SparseMatrix& a_hat, const Eigen::MatrixXd& x);

struct GcnTrainResult {
  GcnModel model;  ///< parameters of the best validation epoch
  std::vector<double> val_curve;
  std::vector<double> train_loss;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
};

GcnTrainResult train_gcn(const Graph& g, const Eigen::MatrixXd& x, std::span<const int> labels,
                         const SplitSpec& split, std::size_t num_classes, const GcnConfig& cfg);

/// Fraction of `nodes` whose argmax prediction equals the label.
double evaluate(const GcnModel& model, const Graph& g, const Eigen::MatrixXd& x, std::span<const int> labels,
                std::span<const std::size_t> nodes);
double accuracy(const Eigen::MatrixXd& probs, std::span<const int> labels, std::span<const std::size_t> nodes);

struct LogisticConfig {
  std::size_t epochs = 500;
  double learning_rate = 0.01;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
};

struct LogisticModel {
  Eigen::MatrixXd weight;
  Eigen::MatrixXd bias;
};

/// Multinomial logistic regression trained with Adam on the train split.
LogisticModel train_logistic(const Eigen::MatrixXd& x, std::span<const int> labels, const SplitSpec& split,
                             std::size_t num_classes, const LogisticConfig& cfg);
Eigen::MatrixXd logistic_predict(const LogisticModel& model, const Eigen::MatrixXd& x);

struct Metrics {
  double accuracy_test = 0.0;
  double accuracy_val = 0.0;
  std::size_t epochs_run = 0;
  std::uint64_t seed = 0;
  std::string feature_variant;
};

std::string metrics_to_json(const Metrics& m);

}  // namespace lggd
