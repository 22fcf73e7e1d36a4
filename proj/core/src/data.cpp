#include "lggd/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "lggd/error.hpp"
#include "lggd/io.hpp"
#include "lggd/random.hpp"

namespace lggd {

void LabeledDataset::validate() const {
  const std::size_t n = graph.num_nodes();
  if (static_cast<std::size_t>(features.rows()) != n) {
    throw Error(ErrorCode::NodeCountMismatch, "features have " + std::to_string(features.rows()) + " rows for " +
                                                  std::to_string(n) + " nodes");
  }
  if (labels.size() != n) {
    throw Error(ErrorCode::NodeCountMismatch, "labels have " + std::to_string(labels.size()) + " entries for " +
                                                  std::to_string(n) + " nodes");
  }
  for (std::size_t x = 0; x < n; ++x) {
    if (labels[x] < 0 || static_cast<std::size_t>(labels[x]) >= num_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "node " + std::to_string(x) + " label " + std::to_string(labels[x]));
    }
  }
}

UnitBallGraph gen_unit_ball_graph(std::size_t n, double eps, std::uint64_t seed) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidConfig, "eps must be > 0");
  Rng rng = make_rng(seed, "unit-ball/points");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  UnitBallGraph out;
  out.positions.resize(n);
  for (auto& p : out.positions) {
    const double r = std::sqrt(unif(rng));
    const double theta = 2.0 * std::numbers::pi * unif(rng);
    p = {r * std::cos(theta), r * std::sin(theta)};
  }

  // Bucket points on an eps grid over [-1, 1]^2; only adjacent cells can hold neighbors.
  const auto cells = static_cast<std::size_t>(std::max(1.0, std::ceil(2.0 / eps)));
  auto cell_of = [&](double v) {
    return std::min(cells - 1, static_cast<std::size_t>(std::max(0.0, (v + 1.0) / eps)));
  };
  std::vector<std::vector<std::size_t>> grid(cells * cells);
  for (std::size_t i = 0; i < n; ++i) grid[cell_of(out.positions[i][0]) * cells + cell_of(out.positions[i][1])].push_back(i);

  std::vector<WeightedEdge> edges;
  const double eps2 = eps * eps;
  for (std::size_t i = 0; i < n; ++i) {
    const auto cx = cell_of(out.positions[i][0]);
    const auto cy = cell_of(out.positions[i][1]);
    for (std::size_t gx = cx ? cx - 1 : 0; gx <= std::min(cells - 1, cx + 1); ++gx) {
      for (std::size_t gy = cy ? cy - 1 : 0; gy <= std::min(cells - 1, cy + 1); ++gy) {
        for (auto j : grid[gx * cells + gy]) {
          if (j <= i) continue;
          const double dx = out.positions[i][0] - out.positions[j][0];
          const double dy = out.positions[i][1] - out.positions[j][1];
          if (dx * dx + dy * dy <= eps2) edges.push_back({i, j, 1.0});
        }
      }
    }
  }
  out.graph = build_graph(n, edges);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::hypot(out.positions[i][0], out.positions[i][1]) >= 1.0 - eps) out.boundary.push_back(i);
  }
  return out;
}

Graph corrupt_edges(const Graph& g, std::size_t m, std::uint64_t seed) {
  const std::size_t n = g.num_nodes();
  const std::size_t pairs = n * (n - (n ? 1 : 0)) / 2;
  const std::size_t available = pairs - g.num_edges();
  if (m > available) {
    throw Error(ErrorCode::NotEnoughNonEdges, "requested " + std::to_string(m) + " of " + std::to_string(available));
  }
  auto edges = g.edges();
  if (m == 0) return build_graph(n, edges);
  Rng rng = make_rng(seed, "corrupt-edges");
  std::vector<std::pair<std::size_t, std::size_t>> added;
  if (2 * m > available) {
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!g.has_edge(i, j)) candidates.emplace_back(i, j);
      }
    }
    for (std::size_t k = 0; k < m; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, candidates.size() - 1);
      std::swap(candidates[k], candidates[pick(rng)]);
      added.push_back(candidates[k]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> node(0, n - 1);
    std::set<std::pair<std::size_t, std::size_t>> chosen;
    while (added.size() < m) {
      auto i = node(rng);
      auto j = node(rng);
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      if (g.has_edge(i, j) || !chosen.insert({i, j}).second) continue;
      added.emplace_back(i, j);
    }
  }
  for (const auto& [i, j] : added) edges.push_back({i, j, 1.0});
  return build_graph(n, edges);
}

LabeledDataset gen_sbm(const SbmParams& params) {
  if (!(params.p_out >= 0.0 && params.p_out < params.p_in && params.p_in <= 1.0)) {
    throw Error(ErrorCode::InvalidProbability, "need 0 <= p_out < p_in <= 1");
  }
  if (params.num_classes == 0 || params.n_per_class == 0) throw Error(ErrorCode::InvalidConfig, "empty SBM");
  if (params.feature_dim < params.num_classes) {
    throw Error(ErrorCode::InvalidConfig, "feature_dim must be >= number of classes for orthogonal means");
  }
  const std::size_t K = params.num_classes;
  const std::size_t n = K * params.n_per_class;
  LabeledDataset ds;
  ds.num_classes = K;
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.labels[i] = static_cast<int>(i / params.n_per_class);

  Rng edge_rng = make_rng(params.seed, "sbm/edges");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<WeightedEdge> edges;
  std::vector<char> has_edge(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = ds.labels[i] == ds.labels[j] ? params.p_in : params.p_out;
      if (unif(edge_rng) < p) {
        edges.push_back({i, j, 1.0});
        has_edge[i] = has_edge[j] = 1;
      }
    }
  }
  if (params.connect_isolated && params.n_per_class > 1) {
    Rng fix_rng = make_rng(params.seed, "sbm/isolated");
    std::uniform_int_distribution<std::size_t> member(0, params.n_per_class - 2);
    for (std::size_t i = 0; i < n; ++i) {
      if (has_edge[i]) continue;
      const std::size_t base = (i / params.n_per_class) * params.n_per_class;
      std::size_t j = base + member(fix_rng);
      if (j >= i) ++j;
      edges.push_back({std::min(i, j), std::max(i, j), 1.0});
      has_edge[i] = has_edge[j] = 1;
    }
  }
  ds.graph = build_graph(n, edges);

  Rng feat_rng = make_rng(params.seed, "sbm/features");
  std::normal_distribution<double> noise(0.0, 1.0);
  ds.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(params.feature_dim));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    ds.features(r, ds.labels[i]) = 1.0;
    if (params.feature_noise > 0.0) {
      for (Eigen::Index c = 0; c < ds.features.cols(); ++c) ds.features(r, c) += params.feature_noise * noise(feat_rng);
    }
  }
  return ds;
}

SplitSpec make_splits(std::span<const int> labels, std::span<const double> fractions, std::uint64_t seed) {
  if (fractions.size() < 3) throw Error(ErrorCode::FractionSum, "need at least train, val and test fractions");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw Error(ErrorCode::FractionSum, "fractions must be nonnegative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::FractionSum, "fractions sum to " + io::format_double(total));
  const std::size_t n = labels.size();

  std::vector<std::size_t> sizes;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i + 1 < fractions.size(); ++i) {
    sizes.push_back(static_cast<std::size_t>(std::llround(fractions[i] * static_cast<double>(n))));
    assigned += sizes.back();
  }
  if (assigned > n) throw Error(ErrorCode::FractionSum, "rounded tranche sizes exceed node count");
  sizes.push_back(n - assigned);

  // Interleave classes: a node at position r of its shuffled class of size
  // n_c sorts at (r + 0.5) / n_c, so every prefix is close to stratified.
  int max_label = -1;
  for (int y : labels) {
    if (y < 0) throw Error(ErrorCode::LabelOutOfRange, "negative label");
    max_label = std::max(max_label, y);
  }
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_label + 1));
  for (std::size_t x = 0; x < n; ++x) by_class[static_cast<std::size_t>(labels[x])].push_back(x);
  Rng rng = make_rng(seed, "splits");
  struct Keyed {
    double key;
    std::size_t cls;
    std::size_t node;
  };
  std::vector<Keyed> order;
  order.reserve(n);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t r = 0; r < members.size(); ++r) {
      order.push_back({(static_cast<double>(r) + 0.5) / static_cast<double>(members.size()), c, members[r]});
    }
  }
  std::vector<std::size_t> class_rank(by_class.size());
  for (std::size_t c = 0; c < class_rank.size(); ++c) class_rank[c] = c;
  std::shuffle(class_rank.begin(), class_rank.end(), rng);
  std::sort(order.begin(), order.end(), [&](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key < b.key : class_rank[a.cls] < class_rank[b.cls];
  });

  std::vector<std::vector<std::size_t>> tranches(sizes.size());
  std::size_t pos = 0;
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    for (std::size_t k = 0; k < sizes[t]; ++k) tranches[t].push_back(order[pos++].node);
    std::sort(tranches[t].begin(), tranches[t].end());
  }
  SplitSpec split;
  split.train = std::move(tranches[0]);
  split.val = std::move(tranches[1]);
  split.test = std::move(tranches.back());
  for (std::size_t t = 2; t + 1 < tranches.size(); ++t) split.new_labels.push_back(std::move(tranches[t]));
  return split;
}

LabeledDataset load_dataset(const std::filesystem::path& graph_path, const std::filesystem::path& features_path,
                            const std::filesystem::path& labels_path, std::optional<std::size_t> num_classes) {
  for (const auto& p : {graph_path, features_path, labels_path}) {
    if (!std::filesystem::exists(p)) throw Error(ErrorCode::FileMissing, p.string());
  }
  LabeledDataset ds;
  ds.graph = io::read_graph(graph_path);
  ds.features = io::parse_matrix_csv(io::read_file(features_path));
  ds.labels = io::parse_labels(io::read_file(labels_path));
  if (num_classes) {
    ds.num_classes = *num_classes;
  } else {
    int max_label = -1;
    for (int y : ds.labels) max_label = std::max(max_label, y);
    ds.num_classes = static_cast<std::size_t>(max_label + 1);
  }
  ds.validate();
  return ds;
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& graph_path,
                  const std::filesystem::path& features_path, const std::filesystem::path& labels_path) {
  io::write_graph(graph_path, ds.graph);
  io::write_file_atomic(features_path, io::format_matrix_csv(ds.features));
  io::write_file_atomic(labels_path, io::format_labels(ds.labels));
}

}  // namespace lggd
