#include "lggd/cli/experiments.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "lggd/error.hpp"
#include "lggd/geodesic.hpp"
#include "lggd/random.hpp"

namespace lggd::cli {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

NodeField steady_p1(const Graph& g, const std::vector<std::size_t>& sources) {
  BoundarySpec boundary{{sources}};
  SolverConfig cfg;
  cfg.norm = Norm::L1;
  const NodeField rho(g.num_nodes(), 1.0);
  const auto field = solve_steady(g, boundary, rho, cfg);
  const auto s = field.slice(0, 0);
  return {s.begin(), s.end()};
}

}  // namespace

std::vector<RobustnessRow> run_robustness(const RobustnessConfig& cfg) {
  if (cfg.seeds == 0) throw Error(ErrorCode::InvalidConfig, "seeds must be >= 1");
  std::vector<std::vector<double>> p1(cfg.corrupt.size());
  std::vector<std::vector<double>> dij(cfg.corrupt.size());
  for (std::size_t s = 0; s < cfg.seeds; ++s) {
    const std::uint64_t run_seed = derive_seed(cfg.seed, "robustness/" + std::to_string(s));
    const auto ub = gen_unit_ball_graph(cfg.n, cfg.eps, run_seed);
    if (ub.boundary.empty()) throw Error(ErrorCode::EmptyBoundary, "unit-ball graph has no boundary nodes");
    const auto p1_before = steady_p1(ub.graph, ub.boundary);
    const auto dij_before = dijkstra(ub.graph, ub.boundary);
    for (std::size_t c = 0; c < cfg.corrupt.size(); ++c) {
      const auto corrupted = corrupt_edges(ub.graph, cfg.corrupt[c], derive_seed(run_seed, "corrupt"));
      p1[c].push_back(distance_map_distortion(p1_before, steady_p1(corrupted, ub.boundary)));
      dij[c].push_back(distance_map_distortion(dij_before, dijkstra(corrupted, ub.boundary)));
    }
  }
  std::vector<RobustnessRow> rows;
  for (std::size_t c = 0; c < cfg.corrupt.size(); ++c) {
    rows.push_back({cfg.corrupt[c], median(p1[c]), median(dij[c])});
  }
  return rows;
}

std::string robustness_to_json(const std::vector<RobustnessRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"n_corrupt", r.n_corrupt},
                 {"distortion_p1", r.distortion_p1},
                 {"distortion_dijkstra", r.distortion_dijkstra}});
  }
  return j.dump(2) + "\n";
}

BoundarySpec boundary_from_split(const SplitSpec& split, const std::vector<int>& labels, std::size_t num_classes) {
  auto boundary = BoundarySpec::from_labels(split.train, labels, num_classes);
  boundary.validate(labels.size());
  return boundary;
}

DynamicResult run_dynamic(const LabeledDataset& ds, const SplitSpec& split, const MlpParams& mlp,
                          const PotentialParams& pot, const SolverConfig& solver, const GcnConfig& gcn) {
  split.validate(ds.graph.num_nodes());
  const auto boundary = boundary_from_split(split, ds.labels, ds.num_classes);
  SolverConfig cfg = solver;
  cfg.clamp_boundary = true;

  const auto base = generate_lggd(ds.graph, boundary, ds.features, mlp, pot, cfg);
  const auto trained = train_gcn(ds.graph, base.values, ds.labels, split, ds.num_classes, gcn);

  DynamicResult result;
  result.epochs_run = trained.epochs_run;
  result.accuracy_val = evaluate(trained.model, ds.graph, base.values, ds.labels, split.val);
  result.accuracy_test.push_back(evaluate(trained.model, ds.graph, base.values, ds.labels, split.test));
  result.boundary_size.push_back(boundary.all_nodes().size());

  std::vector<std::size_t> added;
  std::vector<int> added_labels;
  for (const auto& tranche : split.new_labels) {
    for (auto x : tranche) {
      added.push_back(x);
      added_labels.push_back(ds.labels[x]);
    }
    const auto fm =
        include_new_labels(ds.graph, boundary, added, added_labels, ds.features, mlp, pot, cfg);
    result.accuracy_test.push_back(evaluate(trained.model, ds.graph, fm.values, ds.labels, split.test));
    result.boundary_size.push_back(result.boundary_size.front() + added.size());
  }
  return result;
}

std::string dynamic_to_json(const DynamicResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < result.accuracy_test.size(); ++i) {
    rows.push_back({{"tranches_included", i},
                    {"boundary_size", result.boundary_size[i]},
                    {"accuracy_test", result.accuracy_test[i]}});
  }
  nlohmann::json j{{"accuracy_val", result.accuracy_val}, {"epochs_run", result.epochs_run}, {"rows", rows}};
  return j.dump(2) + "\n";
}

}  // namespace lggd::cli
