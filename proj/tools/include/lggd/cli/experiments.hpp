#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lggd/backbone.hpp"
#include "lggd/data.hpp"
#include "lggd/features.hpp"
#include "lggd/learn.hpp"

namespace lggd::cli {

/// Edge-corruption robustness on unit-ball graphs: for each seed, distances
/// from the boundary band before and after adding random edges, for the
/// p = 1 steady solve (rho = 1) and for hop-count Dijkstra.
struct RobustnessConfig {
  std::size_t n = 2000;
  double eps = 0.12;
  std::vector<std::size_t> corrupt{0, 10, 100, 1000};
  std::size_t seeds = 5;
  std::uint64_t seed = 0;
};

struct RobustnessRow {
  std::size_t n_corrupt = 0;
  /// Medians over seeds.
  double distortion_p1 = 0.0;
  double distortion_dijkstra = 0.0;
};

std::vector<RobustnessRow> run_robustness(const RobustnessConfig& cfg);
std::string robustness_to_json(const std::vector<RobustnessRow>& rows);

/// Boundary spec built from the train split and the full label vector.
BoundarySpec boundary_from_split(const SplitSpec& split, const std::vector<int>& labels, std::size_t num_classes);

/// Frozen-backbone label inclusion: train the GCN once on LGGD features with
/// the train split as boundary, then add tranches cumulatively and re-evaluate
/// the same model on the test split.
struct DynamicResult {
  /// accuracy_test[0] is before any inclusion, then one entry per tranche.
  std::vector<double> accuracy_test;
  std::vector<std::size_t> boundary_size;
  double accuracy_val = 0.0;
  std::size_t epochs_run = 0;
};

DynamicResult run_dynamic(const LabeledDataset& ds, const SplitSpec& split, const MlpParams& mlp,
                          const PotentialParams& pot, const SolverConfig& solver, const GcnConfig& gcn);
std::string dynamic_to_json(const DynamicResult& result);

}  // namespace lggd::cli
