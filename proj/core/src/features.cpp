#include "lggd/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lggd/error.hpp"
#include "lggd/io.hpp"

namespace lggd {

std::uint64_t boundary_fingerprint(const BoundarySpec& boundary) {
  std::vector<std::uint64_t> pairs;
  for (std::size_t k = 0; k < boundary.num_classes(); ++k) {
    for (auto x : boundary.classes[k]) pairs.push_back((static_cast<std::uint64_t>(x) << 16) ^ k);
  }
  std::sort(pairs.begin(), pairs.end());
  return io::fnv1a(pairs.data(), pairs.size() * sizeof(std::uint64_t));
}

namespace {

FeatureMatrix assemble(const Graph& g, const BoundarySpec& boundary, const DistanceField& field,
                       const SolverConfig& cfg) {
  const std::size_t n = g.num_nodes();
  const std::size_t K = field.num_classes();
  const std::size_t T = field.num_snapshots();
  FeatureMatrix fm;
  fm.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(K * T));
  fm.num_classes = K;
  fm.snapshot_times = cfg.snapshot_times;
  fm.boundary_hash = boundary_fingerprint(boundary);
  fm.unreachable.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto reachable = boundary.classes[k].empty() ? std::vector<char>(n, 0)
                                                       : reachability_mask(g, boundary.classes[k]);
    for (std::size_t x = 0; x < n; ++x) {
      if (!reachable[x]) fm.unreachable[k].push_back(x);
    }
    for (std::size_t t = 0; t < T; ++t) {
      const auto s = field.slice(k, t);
      for (std::size_t x = 0; x < n; ++x) {
        // Far nodes drift above the cap before the front reaches them.
        const double v = reachable[x] ? std::min(s[x], kDistanceCap) : kDistanceCap;
        fm.values(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(k * T + t)) = v;
      }
    }
  }
  return fm;
}

SolverConfig clamped(SolverConfig cfg) {
  cfg.clamp_boundary = true;
  return cfg;
}

}  // namespace

FeatureMatrix generate_ggd(const Graph& g, const BoundarySpec& boundary, const PotentialParams& pot,
                           const SolverConfig& cfg) {
  const std::size_t n = g.num_nodes();
  boundary.validate(n);
  const auto rho = potential_eval(g, pot);
  std::vector<NodeField> phi0(boundary.num_classes(), NodeField(n, kDistanceCap));
  for (std::size_t k = 0; k < boundary.num_classes(); ++k) {
    for (auto b : boundary.classes[k]) phi0[k][b] = 0.0;
  }
  const auto solver2 = clamped(cfg);
  return assemble(g, boundary, integrate(g, boundary, rho, phi0, solver2), solver2);
}

FeatureMatrix generate_lggd(const Graph& g, const BoundarySpec& boundary, const Eigen::MatrixXd& features,
                            const MlpParams& mlp, const PotentialParams& pot, const SolverConfig& cfg) {
  const std::size_t n = g.num_nodes();
  boundary.validate(n);
  if (static_cast<std::size_t>(features.rows()) != n) throw Error(ErrorCode::ShapeMismatch, "feature rows vs nodes");
  if (mlp.output_dim() != boundary.num_classes()) throw Error(ErrorCode::ShapeMismatch, "MLP output width vs classes");
  const auto rho = potential_eval(g, pot);
  const Eigen::MatrixXd init = mlp_forward(mlp, features);
  // Boundary entries are zeroed by the clamp inside integrate().
  std::vector<NodeField> phi0(boundary.num_classes(), NodeField(n));
  for (std::size_t k = 0; k < boundary.num_classes(); ++k) {
    for (std::size_t x = 0; x < n; ++x) phi0[k][x] = init(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(k));
  }
  const auto solver2 = clamped(cfg);
  return assemble(g, boundary, integrate(g, boundary, rho, phi0, solver2), solver2);
}

FeatureMatrix include_new_labels(const Graph& g, const BoundarySpec& boundary,
                                 std::span<const std::size_t> new_nodes, std::span<const int> new_labels,
                                 const Eigen::MatrixXd& features, const MlpParams& mlp, const PotentialParams& pot,
                                 const SolverConfig& cfg) {
  if (new_nodes.size() != new_labels.size()) throw Error(ErrorCode::SizeMismatch, "new nodes vs labels");
  boundary.validate(g.num_nodes());
  const auto existing = boundary.all_nodes();
  BoundarySpec enlarged = boundary;
  for (std::size_t i = 0; i < new_nodes.size(); ++i) {
    const auto x = new_nodes[i];
    const int y = new_labels[i];
    if (x >= g.num_nodes()) throw Error(ErrorCode::IndexOutOfRange, "new label node " + std::to_string(x));
    if (y < 0 || static_cast<std::size_t>(y) >= boundary.num_classes()) {
      throw Error(ErrorCode::LabelOutOfRange, "new label " + std::to_string(y));
    }
    if (std::binary_search(existing.begin(), existing.end(), x)) {
      throw Error(ErrorCode::OverlapWithBoundary, "node " + std::to_string(x) + " is already a boundary node");
    }
    enlarged.classes[static_cast<std::size_t>(y)].push_back(x);
  }
  for (auto& c : enlarged.classes) std::sort(c.begin(), c.end());
  return generate_lggd(g, enlarged, features, mlp, pot, cfg);
}

Eigen::MatrixXd zscore_columns(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double mean = m.col(c).mean();
    const double var = (m.col(c).array() - mean).square().mean();
    const double sd = std::sqrt(var);
    out.col(c) = (m.col(c).array() - mean) / (sd > 0 ? sd : 1.0);
  }
  return out;
}

std::string format_feature_csv(const FeatureMatrix& fm) {
  std::ostringstream out;
  out << "node";
  for (std::size_t k = 0; k < fm.num_classes; ++k) {
    for (double t : fm.snapshot_times) out << ",f_c" << k << "_t" << io::format_double(t);
  }
  out << '\n';
  for (Eigen::Index x = 0; x < fm.values.rows(); ++x) {
    out << x;
    for (Eigen::Index c = 0; c < fm.values.cols(); ++c) out << ',' << io::format_double(fm.values(x, c));
    out << '\n';
  }
  return out.str();
}

std::string format_feature_sidecar(const FeatureMatrix& fm) {
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(fm.boundary_hash));
  nlohmann::json j{{"K", fm.num_classes},
                   {"T", fm.snapshot_times.size()},
                   {"snapshot_times", fm.snapshot_times},
                   {"boundary_hash", hash}};
  nlohmann::json unreachable = nlohmann::json::array();
  for (const auto& u : fm.unreachable) unreachable.push_back(u.size());
  j["unreachable_per_class"] = unreachable;
  return j.dump(2) + "\n";
}

Eigen::MatrixXd parse_any_feature_csv(const std::string& text) {
  if (text.rfind("node,", 0) != 0) return io::parse_matrix_csv(text);
  const auto body_start = text.find('\n');
  if (body_start == std::string::npos) return Eigen::MatrixXd(0, 0);
  const Eigen::MatrixXd with_index = io::parse_matrix_csv(text.substr(body_start + 1));
  for (Eigen::Index r = 0; r < with_index.rows(); ++r) {
    if (with_index(r, 0) != static_cast<double>(r)) {
      throw Error(ErrorCode::ParseError, "feature CSV rows must be in node order");
    }
  }
  return with_index.rightCols(with_index.cols() - 1);
}

}  // namespace lggd
