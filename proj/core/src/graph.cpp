#include "lggd/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lggd/error.hpp"

namespace lggd {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::NonpositiveWeight: return "NonpositiveWeight";
    case ErrorCode::IsolatedNode: return "IsolatedNode";
    case ErrorCode::UnsupportedNorm: return "UnsupportedNorm";
    case ErrorCode::EmptySourceSet: return "EmptySourceSet";
    case ErrorCode::EmptyNeighborhood: return "EmptyNeighborhood";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::NonpositiveStep: return "NonpositiveStep";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyBoundary: return "EmptyBoundary";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::OverlapWithBoundary: return "OverlapWithBoundary";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::NotEnoughNonEdges: return "NotEnoughNonEdges";
    case ErrorCode::FractionSum: return "FractionSum";
    case ErrorCode::FileMissing: return "FileMissing";
    case ErrorCode::NodeCountMismatch: return "NodeCountMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Diverged: return "Diverged";
  }
  return "Unknown";
}

Norm norm_from_exponent(double p) {
  if (p == 1.0) return Norm::L1;
  if (std::isinf(p) && p > 0) return Norm::Linf;
  throw Error(ErrorCode::UnsupportedNorm, "only p=1 and p=inf are implemented, got " + std::to_string(p));
}

double norm_exponent(Norm norm) noexcept {
  return norm == Norm::L1 ? 1.0 : std::numeric_limits<double>::infinity();
}

namespace {

void check_node(const Graph& g, std::size_t i) {
  if (i >= g.num_nodes()) {
    throw Error(ErrorCode::IndexOutOfRange,
                "node " + std::to_string(i) + " with n=" + std::to_string(g.num_nodes()));
  }
}

}  // namespace

std::span<const Neighbor> Graph::neighbors(std::size_t i) const {
  check_node(*this, i);
  return {adjacency_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

std::size_t Graph::out_degree(std::size_t i) const { return neighbors(i).size(); }

double Graph::weight(std::size_t i, std::size_t j) const {
  check_node(*this, j);
  auto nb = neighbors(i);
  auto it = std::lower_bound(nb.begin(), nb.end(), j,
                             [](const Neighbor& a, std::size_t key) { return a.node < key; });
  return (it != nb.end() && it->node == j) ? it->weight : 0.0;
}

std::vector<WeightedEdge> Graph::edges() const {
  std::vector<WeightedEdge> out;
  out.reserve(num_edges());
  for (std::size_t i = 0; i < num_nodes(); ++i) {
    for (const auto& nb : neighbors(i)) {
      if (i < nb.node) out.push_back({i, nb.node, nb.weight});
    }
  }
  return out;
}

Graph build_graph(std::size_t n_nodes, std::span<const WeightedEdge> edges) {
  struct Directed {
    std::size_t from;
    std::size_t to;
    double w;
  };
  std::vector<Directed> directed;
  directed.reserve(2 * edges.size());
  for (const auto& e : edges) {
    if (e.i >= n_nodes || e.j >= n_nodes) {
      throw Error(ErrorCode::IndexOutOfRange, "edge (" + std::to_string(e.i) + "," +
                                                  std::to_string(e.j) + ") with n=" +
                                                  std::to_string(n_nodes));
    }
    if (e.i == e.j) throw Error(ErrorCode::SelfLoop, "node " + std::to_string(e.i));
    if (!(e.w > 0.0) || !std::isfinite(e.w)) {
      throw Error(ErrorCode::NonpositiveWeight, "edge (" + std::to_string(e.i) + "," +
                                                    std::to_string(e.j) + ") weight " +
                                                    std::to_string(e.w));
    }
    directed.push_back({e.i, e.j, e.w});
    directed.push_back({e.j, e.i, e.w});
  }
  std::sort(directed.begin(), directed.end(), [](const Directed& a, const Directed& b) {
    return a.from != b.from ? a.from < b.from : a.to < b.to;
  });
  for (std::size_t k = 1; k < directed.size(); ++k) {
    if (directed[k].from == directed[k - 1].from && directed[k].to == directed[k - 1].to) {
      throw Error(ErrorCode::DuplicateEdge, "pair {" + std::to_string(directed[k].from) + "," +
                                                std::to_string(directed[k].to) + "}");
    }
  }

  Graph g;
  g.offsets_.assign(n_nodes + 1, 0);
  g.adjacency_.reserve(directed.size());
  for (const auto& d : directed) {
    ++g.offsets_[d.from + 1];
    g.adjacency_.push_back({d.to, d.w, std::sqrt(d.w)});
  }
  for (std::size_t i = 0; i < n_nodes; ++i) g.offsets_[i + 1] += g.offsets_[i];
  return g;
}

double degree(const Graph& g, std::size_t i) {
  double sum = 0.0;
  for (const auto& nb : g.neighbors(i)) sum += nb.weight;
  return sum;
}

std::vector<double> degrees(const Graph& g) {
  std::vector<double> out(g.num_nodes());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = degree(g, i);
  return out;
}

PotentialParams PotentialParams::fixed(double alpha) {
  PotentialParams p;
  p.mode = Mode::FixedAlpha;
  p.alpha = alpha;
  return p;
}

PotentialParams PotentialParams::learned(std::vector<double> log_rho) {
  PotentialParams p;
  p.mode = Mode::Learned;
  p.log_rho = std::move(log_rho);
  return p;
}

PotentialParams PotentialParams::learned_from_alpha(const Graph& g, double alpha) {
  std::vector<double> log_rho(g.num_nodes());
  for (std::size_t i = 0; i < log_rho.size(); ++i) {
    const double d = degree(g, i);
    if (d <= 0.0) throw Error(ErrorCode::IsolatedNode, "node " + std::to_string(i));
    log_rho[i] = alpha * std::log(d);
  }
  auto p = learned(std::move(log_rho));
  p.alpha = alpha;
  return p;
}

NodeField potential_eval(const Graph& g, const PotentialParams& p) {
  NodeField rho(g.num_nodes());
  if (p.mode == PotentialParams::Mode::FixedAlpha) {
    for (std::size_t i = 0; i < rho.size(); ++i) {
      const double d = degree(g, i);
      if (d <= 0.0) throw Error(ErrorCode::IsolatedNode, "node " + std::to_string(i));
      rho[i] = std::pow(d, p.alpha);
    }
  } else {
    if (p.log_rho.size() != g.num_nodes()) {
      throw Error(ErrorCode::SizeMismatch, "log_rho has " + std::to_string(p.log_rho.size()) +
                                               " entries for " + std::to_string(g.num_nodes()) +
                                               " nodes");
    }
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::exp(p.log_rho[i]);
  }
  return rho;
}

double neg_grad_norm(const Graph& g, std::span<const double> f, std::size_t i, Norm norm) {
  if (f.size() != g.num_nodes()) {
    throw Error(ErrorCode::SizeMismatch, "field length " + std::to_string(f.size()));
  }
  double acc = 0.0;
  for (const auto& nb : g.neighbors(i)) {
    const double diff = f[i] - f[nb.node];
    if (diff <= 0.0) continue;
    const double term = nb.sqrt_weight * diff;
    acc = norm == Norm::L1 ? acc + term : std::max(acc, term);
  }
  return acc;
}

}  // namespace lggd
