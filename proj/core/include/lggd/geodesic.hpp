#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lggd/graph.hpp"

namespace lggd {

/// Boundary nodes partitioned by class. classes[k] lists the nodes whose
/// distance to class k is pinned to zero.
struct BoundarySpec {
  std::vector<std::vector<std::size_t>> classes;

  std::size_t num_classes() const noexcept { return classes.size(); }
  /// Sorted union of all class lists.
  std::vector<std::size_t> all_nodes() const;
  /// Throws IndexOutOfRange, OverlapWithBoundary (classes not disjoint) or
  /// EmptyBoundary (union empty).
  void validate(std::size_t n_nodes) const;

  static BoundarySpec from_labels(std::span<const std::size_t> nodes, std::span<const int> labels,
                                  std::size_t num_classes);
};

struct SolverConfig {
  Norm norm = Norm::L1;
  double step_size = 0.1;
  std::vector<double> snapshot_times{1.0, 2.0, 3.0, 4.0, 5.0};
  bool clamp_boundary = true;
  double steady_tol = 1e-8;
  std::size_t max_sweeps = 0;  ///< 0 means 10 * n
  unsigned workers = 1;

  /// Throws NonpositiveStep or InvalidConfig.
  void validate() const;
  /// Integer step index of each snapshot time.
  std::vector<std::size_t> snapshot_steps() const;
};

/// Values indexed [class][snapshot][node], stored contiguously per (class, snapshot).
class DistanceField {
 public:
  DistanceField() = default;
  DistanceField(std::size_t num_classes, std::size_t num_snapshots, std::size_t num_nodes, double fill = 0.0)
      : k_(num_classes), t_(num_snapshots), n_(num_nodes), values_(num_classes * num_snapshots * num_nodes, fill) {}

  std::size_t num_classes() const noexcept { return k_; }
  std::size_t num_snapshots() const noexcept { return t_; }
  std::size_t num_nodes() const noexcept { return n_; }

  double& at(std::size_t k, std::size_t t, std::size_t x) { return values_[(k * t_ + t) * n_ + x]; }
  double at(std::size_t k, std::size_t t, std::size_t x) const { return values_[(k * t_ + t) * n_ + x]; }

  std::span<double> slice(std::size_t k, std::size_t t) { return {values_.data() + (k * t_ + t) * n_, n_}; }
  std::span<const double> slice(std::size_t k, std::size_t t) const {
    return {values_.data() + (k * t_ + t) * n_, n_};
  }

  const std::vector<double>& raw() const noexcept { return values_; }

 private:
  std::size_t k_ = 0;
  std::size_t t_ = 0;
  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// Hop-count shortest-path distances from a source set (edge weights are
/// ignored). Unreachable nodes get kDistanceCap.
NodeField dijkstra(const Graph& g, std::span<const std::size_t> sources);

/// 1 for nodes connected to at least one source, 0 otherwise.
std::vector<char> reachability_mask(const Graph& g, std::span<const std::size_t> sources);

/// Per-node eikonal update: the t solving
///   L1:   sum_j c_j (t - a_j)_+ = rhs
///   Linf: max_j c_j (t - a_j)_+ = rhs   (t = min_j a_j + rhs / c_j)
double local_solve(std::span<const double> neighbor_values, std::span<const double> coeffs, double rhs,
                   Norm norm);

/// Steady state of rho |grad^- f|_p = 1 with f = 0 on each class boundary,
/// by Gauss-Seidel sweeps in node-index order. Result has one snapshot.
/// Throws NotConverged when max_sweeps is exhausted.
DistanceField solve_steady(const Graph& g, const BoundarySpec& boundary, std::span<const double> rho,
                           const SolverConfig& cfg);

/// |rho(x) |grad^- f|(x) - 1| off the boundary, |f(x)| on it.
NodeField residual(const Graph& g, std::span<const double> f, std::span<const double> rho, Norm norm,
                   std::span<const std::size_t> boundary);

/// Integrates df/dt = 1 - rho(x) |grad^- f|_p(x) per class with fixed-step
/// RK4 and records the configured snapshot times. With clamp_boundary the
/// class's boundary nodes are held at 0 for every stage.
DistanceField integrate(const Graph& g, const BoundarySpec& boundary, std::span<const double> rho,
                        std::span<const NodeField> phi0, const SolverConfig& cfg);

/// mean_x |after(x) - before(x)| / (before(x) + 1)
double distance_map_distortion(std::span<const double> before, std::span<const double> after);

/// CSV `node,class,t,value`, node-major then class then snapshot.
std::string format_distance_field_csv(const DistanceField& field, std::span<const double> snapshot_times);

}  // namespace lggd
