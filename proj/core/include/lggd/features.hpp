#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lggd/geodesic.hpp"
#include "lggd/learn.hpp"

namespace lggd {

/// n x (K*T) distance features; column k*T + t holds f^k(., snapshot_times[t]).
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::size_t num_classes = 0;
  std::vector<double> snapshot_times;
  std::uint64_t boundary_hash = 0;
  /// unreachable[k] lists nodes with no path to any class-k boundary node;
  /// their class-k columns hold kDistanceCap.
  std::vector<std::vector<std::size_t>> unreachable;

  std::size_t num_snapshots() const noexcept { return snapshot_times.size(); }
  std::size_t column(std::size_t k, std::size_t t) const noexcept { return k * snapshot_times.size() + t; }
};

/// Stable fingerprint of (node, class) boundary membership.
std::uint64_t boundary_fingerprint(const BoundarySpec& boundary);

/// Parameter-free distance features: phi0 = 0 on the boundary and
/// kDistanceCap elsewhere, integrated with the boundary clamped.
FeatureMatrix generate_ggd(const Graph& g, const BoundarySpec& boundary, const PotentialParams& pot,
                           const SolverConfig& cfg);

/// Learned distance features: phi0 = MLP(features) off the boundary, 0 on it,
/// integrated with the boundary clamped and the learned potential.
FeatureMatrix generate_lggd(const Graph& g, const BoundarySpec& boundary, const Eigen::MatrixXd& features,
                            const MlpParams& mlp, const PotentialParams& pot, const SolverConfig& cfg);

/// Enlarges each class boundary with newly labeled nodes and regenerates the
/// learned features with unchanged parameters.
FeatureMatrix include_new_labels(const Graph& g, const BoundarySpec& boundary,
                                 std::span<const std::size_t> new_nodes, std::span<const int> new_labels,
                                 const Eigen::MatrixXd& features, const MlpParams& mlp, const PotentialParams& pot,
                                 const SolverConfig& cfg);

/// Column-wise z-score; off by default in every pipeline.
Eigen::MatrixXd zscore_columns(const Eigen::MatrixXd& m);

/// CSV with header `node,f_c{k}_t{t},...`.
std::string format_feature_csv(const FeatureMatrix& fm);
/// Sidecar JSON: {K, T, snapshot_times, boundary_hash}.
std::string format_feature_sidecar(const FeatureMatrix& fm);
/// Reads either a FeatureMatrix CSV (header starting with `node,`) or a
/// headerless node-feature CSV.
Eigen::MatrixXd parse_any_feature_csv(const std::string& text);

}  // namespace lggd
