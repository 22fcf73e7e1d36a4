#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lggd/graph.hpp"
#include "lggd/split.hpp"

namespace lggd {

struct LabeledDataset {
  Graph graph;
  Eigen::MatrixXd features;
  std::vector<int> labels;
  std::size_t num_classes = 0;

  void validate() const;
};

struct UnitBallGraph {
  Graph graph;
  std::vector<std::array<double, 2>> positions;
  /// Nodes with |x| >= 1 - eps, ascending.
  std::vector<std::size_t> boundary;
};

/// n uniform points in the unit disk, unit-weight edge iff the Euclidean
/// distance is <= eps.
UnitBallGraph gen_unit_ball_graph(std::size_t n, double eps, std::uint64_t seed);

/// Adds exactly m distinct unit-weight edges between currently non-adjacent
/// pairs, sampled uniformly. Throws NotEnoughNonEdges.
Graph corrupt_edges(const Graph& g, std::size_t m, std::uint64_t seed);

struct SbmParams {
  std::size_t n_per_class = 300;
  std::size_t num_classes = 3;
  double p_in = 0.02;
  double p_out = 0.005;
  std::size_t feature_dim = 16;
  double feature_noise = 1.0;
  std::uint64_t seed = 0;
  /// Attach each isolated node to a random node of its own class so that the
  /// degree-based potential is defined everywhere.
  bool connect_isolated = true;
};

/// Planted-partition graph; node i belongs to class i / n_per_class. Features
/// are the class mean (standard basis vector e_k) plus N(0, noise^2) noise.
LabeledDataset gen_sbm(const SbmParams& params);

/// Stratified random partition. fractions = (train, val, [tranche...], test)
/// and must sum to 1. Every tranche but the last gets round(f * n) nodes;
/// the last gets the remainder.
SplitSpec make_splits(std::span<const int> labels, std::span<const double> fractions, std::uint64_t seed);

/// Reads the three ingestion files. Without num_classes, K = max label + 1.
LabeledDataset load_dataset(const std::filesystem::path& graph_path, const std::filesystem::path& features_path,
                            const std::filesystem::path& labels_path,
                            std::optional<std::size_t> num_classes = std::nullopt);
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& graph_path,
                  const std::filesystem::path& features_path, const std::filesystem::path& labels_path);

}  // namespace lggd
