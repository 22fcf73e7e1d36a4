#include <random>
#include <set>
#include <utility>
#include <vector>

#include <benchmark/benchmark.h>

#include "lggd/data.hpp"
#include "lggd/geodesic.hpp"
#include "lggd/learn.hpp"

namespace {

using namespace lggd;

Graph ring_plus_chords(std::size_t n, std::size_t chords, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> node(0, n - 1);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<WeightedEdge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    seen.emplace(std::min(i, (i + 1) % n), std::max(i, (i + 1) % n));
    edges.push_back({i, (i + 1) % n, 1.0});
  }
  while (edges.size() < n + chords) {
    const auto a = node(rng), b = node(rng);
    if (a == b || !seen.emplace(std::min(a, b), std::max(a, b)).second) continue;
    edges.push_back({std::min(a, b), std::max(a, b), 1.0});
  }
  return build_graph(n, edges);
}

// Fixed node count and step count; the argument sets the chord count.
void BM_IntegrateEdges(benchmark::State& state) {
  const std::size_t n = 20000;
  const auto g = ring_plus_chords(n, static_cast<std::size_t>(state.range(0)), 1);
  const BoundarySpec b{{{0}, {1}, {2}}};
  const std::vector<NodeField> phi0(3, NodeField(n, 1.0));
  const std::vector<double> rho(n, 0.1);
  SolverConfig cfg;
  cfg.snapshot_times = {2.0};
  for (auto _ : state) benchmark::DoNotOptimize(integrate(g, b, rho, phi0, cfg));
  state.counters["edges"] = static_cast<double>(g.num_edges());
  state.SetComplexityN(static_cast<benchmark::IterationCount>(g.num_edges()));
}
BENCHMARK(BM_IntegrateEdges)->Arg(20000)->Arg(60000)->Arg(140000)->Complexity()->Unit(benchmark::kMillisecond);

void BM_SolveSteady(benchmark::State& state) {
  const auto norm = state.range(0) == 0 ? Norm::L1 : Norm::Linf;
  const std::size_t n = 5000;
  const auto g = ring_plus_chords(n, 4 * n, 2);
  const BoundarySpec b{{{0, 17}, {2500}}};
  const std::vector<double> rho(n, 1.0);
  SolverConfig cfg;
  cfg.norm = norm;
  for (auto _ : state) benchmark::DoNotOptimize(solve_steady(g, b, rho, cfg));
}
BENCHMARK(BM_SolveSteady)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Pipeline1Epoch(benchmark::State& state) {
  SbmParams p;
  const auto ds = gen_sbm(p);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < ds.graph.num_nodes(); i += 40) nodes.push_back(i);
  const auto boundary = BoundarySpec::from_labels(nodes, ds.labels, ds.num_classes);
  const std::vector<std::size_t> hidden{64};
  const auto mlp = MlpParams::init(static_cast<std::size_t>(ds.features.cols()), hidden, ds.num_classes, 0);
  const auto pot = PotentialParams::learned_from_alpha(ds.graph, -0.5);
  SolverConfig solver;
  solver.clamp_boundary = false;
  TrainConfig train;
  train.learn_rho = state.range(0) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_gradients(ds.graph, boundary, ds.features, mlp, pot, solver, train));
  }
}
BENCHMARK(BM_Pipeline1Epoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
