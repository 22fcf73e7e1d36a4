#pragma once

#include <cstddef>
#include <span>
#include <tuple>
#include <vector>

namespace lggd {

/// Stand-in for "infinite" distance. Fields never hold IEEE infinities.
inline constexpr double kDistanceCap = 1e6;

using NodeField = std::vector<double>;

/// Norm used for the directional gradient. Only the two norms needed by the
/// method (p = 1) and its shortest-path limit (p = inf) are supported.
enum class Norm { L1, Linf };

/// Maps a numeric exponent to a Norm; anything other than 1 or +inf throws
/// UnsupportedNorm.
Norm norm_from_exponent(double p);
double norm_exponent(Norm norm) noexcept;

struct Neighbor {
  std::size_t node;
  double weight;
  double sqrt_weight;
};

struct WeightedEdge {
  std::size_t i;
  std::size_t j;
  double w;
};

/// Symmetric weighted graph in compressed adjacency form. Each node's
/// neighbor list is sorted by neighbor index. Immutable once built.
class Graph {
 public:
  Graph() = default;

  std::size_t num_nodes() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return adjacency_.size() / 2; }

  std::span<const Neighbor> neighbors(std::size_t i) const;
  std::size_t out_degree(std::size_t i) const;

  /// Weight of edge (i, j), 0 when absent.
  double weight(std::size_t i, std::size_t j) const;
  bool has_edge(std::size_t i, std::size_t j) const { return weight(i, j) > 0.0; }

  /// Each undirected edge once, with i < j, in (i, j) order.
  std::vector<WeightedEdge> edges() const;

 private:
  friend Graph build_graph(std::size_t, std::span<const WeightedEdge>);

  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
};

/// Validates and symmetrizes an undirected edge list. Each unordered pair may
/// appear once; (i, j) and (j, i) together count as a duplicate.
Graph build_graph(std::size_t n_nodes, std::span<const WeightedEdge> edges);

/// Weighted degree: sum of incident edge weights.
double degree(const Graph& g, std::size_t i);
std::vector<double> degrees(const Graph& g);

struct PotentialParams {
  enum class Mode { FixedAlpha, Learned };

  Mode mode = Mode::FixedAlpha;
  double alpha = 0.0;
  std::vector<double> log_rho;

  static PotentialParams fixed(double alpha);
  static PotentialParams learned(std::vector<double> log_rho);
  /// Learned parameterization that starts exactly at delta(x)^alpha.
  static PotentialParams learned_from_alpha(const Graph& g, double alpha);
};

/// rho(x) = delta(x)^alpha (fixed) or exp(log_rho(x)) (learned). Fixed mode
/// rejects isolated nodes.
NodeField potential_eval(const Graph& g, const PotentialParams& p);

/// L_p norm of the negative directional gradient at node i:
///   L1:   sum_j sqrt(w_ij) (f_i - f_j)_+
///   Linf: max_j sqrt(w_ij) (f_i - f_j)_+
double neg_grad_norm(const Graph& g, std::span<const double> f, std::size_t i, Norm norm);

}  // namespace lggd
