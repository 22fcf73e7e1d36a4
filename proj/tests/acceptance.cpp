#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lggd/backbone.hpp"
#include "lggd/cli/experiments.hpp"
#include "lggd/data.hpp"
#include "lggd/features.hpp"
#include "lggd/geodesic.hpp"
#include "lggd/learn.hpp"

using namespace lggd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

enum class Status { Pass, Fail, Skipped };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

/// Random spanning tree plus independent extra edges with probability p.
Graph random_connected(std::size_t n, double p, std::uint64_t seed, bool weighted) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<WeightedEdge> edges;
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  auto weight = [&] { return weighted ? 0.2 + 1.8 * unif(rng) : 1.0; };
  for (std::size_t i = 1; i < n; ++i) {
    const auto j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    adj[i][j] = adj[j][i] = 1;
    edges.push_back({j, i, weight()});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!adj[i][j] && unif(rng) < p) edges.push_back({i, j, weight()});
    }
  }
  return build_graph(n, edges);
}

/// Ring on n nodes plus m distinct random chords.
Graph ring_plus_edges(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> node(0, n - 1);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<WeightedEdge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    seen.emplace(std::min(i, (i + 1) % n), std::max(i, (i + 1) % n));
    edges.push_back({i, (i + 1) % n, 1.0});
  }
  while (edges.size() < n + m) {
    const auto a = node(rng), b = node(rng);
    if (a == b || !seen.emplace(std::min(a, b), std::max(a, b)).second) continue;
    edges.push_back({std::min(a, b), std::max(a, b), 1.0});
  }
  return build_graph(n, edges);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::size_t n = 5 + s % 46;
    const auto g = random_connected(n, 0.08, 1000 + s, false);
    BoundarySpec b{{{s % n}}};
    SolverConfig cfg;
    cfg.norm = Norm::Linf;
    const auto f = solve_steady(g, b, std::vector<double>(n, 1.0), cfg);
    const auto d = dijkstra(g, b.classes[0]);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(f.at(0, 0, i) - d[i]));
  }
  const double secs = seconds_since(t0);
  return pass_if(worst <= 1e-9 && secs < 10.0, fmt("max |steady - dijkstra| = %.3g, %.2f s", worst, secs));
}

Outcome criterion2() {
  const auto g = build_graph(2, std::vector<WeightedEdge>{{0, 1, 1.0}});
  SolverConfig cfg;
  cfg.step_size = 0.01;
  cfg.snapshot_times.clear();
  for (int k = 1; k <= 500; ++k) cfg.snapshot_times.push_back(0.01 * k);
  double worst = 0.0;
  for (double f0 : {kDistanceCap, 0.0, 3.0}) {
    const std::vector<NodeField> phi0{{0.0, f0}};
    const auto field = integrate(g, BoundarySpec{{{0}}}, std::vector<double>(2, 1.0), phi0, cfg);
    for (std::size_t t = 0; t < cfg.snapshot_times.size(); ++t) {
      const double exact = 1.0 + (f0 - 1.0) * std::exp(-cfg.snapshot_times[t]);
      worst = std::max(worst, std::abs(field.at(0, t, 1) - exact) / std::abs(exact));
    }
  }
  return pass_if(worst <= 1e-6, fmt("max relative error %.3g", worst));
}

Outcome criterion3() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t n = 50 + 7 * s;
    const auto g = random_connected(n, 6.0 / static_cast<double>(n), 2000 + s, s % 2 == 1);
    const std::vector<double> rho(n, 1.0);
    BoundarySpec b{{{0}, {n / 2, n - 1}}};
    SolverConfig cfg;
    cfg.snapshot_times = {50.0};
    std::vector<NodeField> phi0(2, NodeField(n, kDistanceCap));
    for (std::size_t k = 0; k < 2; ++k) {
      for (auto x : b.classes[k]) phi0[k][x] = 0.0;
    }
    const auto dyn = integrate(g, b, rho, phi0, cfg);
    const auto st = solve_steady(g, b, rho, cfg);
    for (std::size_t k = 0; k < 2; ++k) {
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(dyn.at(k, 0, i) - st.at(k, 0, i)));
    }
  }
  return pass_if(worst <= 1e-3, fmt("max |integrate(50) - steady| = %.3g", worst));
}

Outcome criterion4() {
  const double eps = 1e-4;
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const std::size_t n = 10 + s;
    const std::size_t k = 2 + s % 2;
    const auto g = random_connected(n, 0.2, 3000 + s, true);
    std::mt19937_64 rng(s);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(rng);
    BoundarySpec b;
    b.classes.resize(k);
    for (std::size_t c = 0; c < k; ++c) b.classes[c] = {2 * c, 2 * c + 1};
    const std::vector<std::size_t> hidden{5};
    const auto mlp = MlpParams::init(3, hidden, k, 100 + s);
    const auto pot = PotentialParams::learned_from_alpha(g, -0.5);
    SolverConfig solver;
    solver.clamp_boundary = false;
    solver.snapshot_times = {0.1, 0.2, 0.3};
    TrainConfig train;
    train.learn_rho = true;
    const auto lg = loss_and_gradients(g, b, x, mlp, pot, solver, train);
    auto loss_at = [&](const MlpParams& m, const PotentialParams& q) {
      return loss_and_gradients(g, b, x, m, q, solver, TrainConfig{}).loss;
    };
    auto record = [&](double analytic, double fd) {
      const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-4});
      worst = std::max(worst, std::abs(analytic - fd) / scale);
      ++checked;
    };
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
      for (int which = 0; which < 2; ++which) {
        const auto& analytic = lg.mlp[2 * l + which];
        for (Eigen::Index i = 0; i < analytic.size(); ++i) {
          auto up = mlp, dn = mlp;
          (which ? up.layers[l].bias : up.layers[l].weight).data()[i] += eps;
          (which ? dn.layers[l].bias : dn.layers[l].weight).data()[i] -= eps;
          record(analytic.data()[i], (loss_at(up, pot) - loss_at(dn, pot)) / (2 * eps));
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto up = pot, dn = pot;
      up.log_rho[i] += eps;
      dn.log_rho[i] -= eps;
      record((*lg.log_rho)[i], (loss_at(mlp, up) - loss_at(mlp, dn)) / (2 * eps));
    }
  }
  return pass_if(worst <= 1e-4, fmt("%zu parameters, max relative error %.3g", checked, worst));
}

Outcome criterion5() {
  const auto t0 = Clock::now();
  cli::RobustnessConfig cfg;
  cfg.corrupt = {10, 100, 1000};
  const auto rows = cli::run_robustness(cfg);
  const double secs = seconds_since(t0);
  bool ok = secs < 120.0;
  std::string detail;
  for (const auto& r : rows) {
    ok = ok && r.distortion_p1 <= 0.5 * r.distortion_dijkstra;
    detail += fmt("%zu: %.4g vs %.4g; ", r.n_corrupt, r.distortion_p1, r.distortion_dijkstra);
  }
  return pass_if(ok, detail + fmt("%.1f s", secs));
}

/// Shared protocol for the SBM classification criteria.
struct SbmRun {
  LabeledDataset ds;
  SplitSpec split;
  BoundarySpec boundary;
};

SbmRun sbm_run(std::uint64_t seed, std::vector<double> fractions) {
  SbmParams p;
  p.seed = seed;
  SbmRun r{gen_sbm(p), {}, {}};
  r.split = make_splits(r.ds.labels, fractions, seed);
  r.boundary = cli::boundary_from_split(r.split, r.ds.labels, r.ds.num_classes);
  return r;
}

double gcn_accuracy(const SbmRun& r, const Eigen::MatrixXd& x, std::uint64_t seed) {
  GcnConfig gc;
  gc.seed = seed;
  const auto trained = train_gcn(r.ds.graph, x, r.ds.labels, r.split, r.ds.num_classes, gc);
  return evaluate(trained.model, r.ds.graph, x, r.ds.labels, r.split.test);
}

Pipeline1Result pipeline1(const SbmRun& r, std::uint64_t seed, bool learn_rho) {
  SolverConfig solver;
  solver.clamp_boundary = false;
  TrainConfig train;
  train.seed = seed;
  train.learn_rho = learn_rho;
  return train_pipeline1(r.ds.graph, r.boundary, r.ds.features, PotentialParams::fixed(-0.5), solver, train);
}

struct ClassificationMeans {
  double ggd = 0.0;
  double lggd = 0.0;
  double seconds = 0.0;
};

ClassificationMeans classification_means() {
  const auto t0 = Clock::now();
  std::vector<double> ggd, lggd;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto r = sbm_run(s, {0.025, 0.025, 0.95});
    const SolverConfig cfg;
    const auto g = generate_ggd(r.ds.graph, r.boundary, PotentialParams::fixed(-0.5), cfg);
    const auto p1 = pipeline1(r, s, false);
    const auto l = generate_lggd(r.ds.graph, r.boundary, r.ds.features, p1.mlp, p1.potential, cfg);
    ggd.push_back(gcn_accuracy(r, g.values, s));
    lggd.push_back(gcn_accuracy(r, l.values, s));
  }
  return {mean(ggd), mean(lggd), seconds_since(t0)};
}

Outcome criterion6(const ClassificationMeans& m) {
  return pass_if(m.lggd >= m.ggd + 0.02 && m.seconds < 600.0,
                 fmt("GGD %.4f, LGGD %.4f, %.1f s", m.ggd, m.lggd, m.seconds));
}

Outcome criterion7(const ClassificationMeans& m) {
  std::vector<double> acc;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto r = sbm_run(s, {0.025, 0.025, 0.95});
    const auto p1 = pipeline1(r, s, true);
    const auto l = generate_lggd(r.ds.graph, r.boundary, r.ds.features, p1.mlp, p1.potential, SolverConfig{});
    acc.push_back(gcn_accuracy(r, l.values, s));
  }
  const double rho = mean(acc);
  return pass_if(rho >= m.lggd - 0.005, fmt("learned rho %.4f, fixed rho %.4f", rho, m.lggd));
}

Outcome criterion8() {
  std::vector<double> sums;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto r = sbm_run(s, {0.025, 0.025, 0.1, 0.1, 0.1, 0.65});
    const auto p1 = pipeline1(r, s, false);
    GcnConfig gc;
    gc.seed = s;
    const auto res = cli::run_dynamic(r.ds, r.split, p1.mlp, p1.potential, SolverConfig{}, gc);
    if (sums.empty()) sums.assign(res.accuracy_test.size(), 0.0);
    for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += res.accuracy_test[i] / 10.0;
  }
  bool ok = sums.back() >= sums.front() + 0.01;
  std::string detail;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (i > 0) ok = ok && sums[i] >= sums[i - 1] - 0.005;
    detail += fmt(i ? " -> %.4f" : "%.4f", sums[i]);
  }
  return pass_if(ok, "mean test accuracy " + detail);
}

Outcome criterion9() {
  const std::size_t n = 20000;
  SolverConfig cfg;
  cfg.snapshot_times = {2.0};
  auto time_integrate = [&](const Graph& g) -> double {
    BoundarySpec b{{{0}, {1}, {2}}};
    std::vector<NodeField> phi0(3, NodeField(n, 1.0));
    const std::vector<double> rho(n, 0.1);
    double best = INFINITY;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = Clock::now();
      const auto f = integrate(g, b, rho, phi0, cfg);
      best = std::min(best, seconds_since(t0));
      if (!std::isfinite(f.at(0, 0, n - 1))) return INFINITY;
    }
    return best;
  };
  const auto small = ring_plus_edges(n, 50000, 9);
  const auto large = ring_plus_edges(n, 2 * 50000 + n, 9);
  const double a = time_integrate(small), b = time_integrate(large);
  const double ratio = b / a;
  return pass_if(ratio <= 3.0, fmt("|E| %zu -> %zu, %.3f s -> %.3f s, ratio %.2f", small.num_edges(),
                                    large.num_edges(), a, b, ratio));
}

Outcome criterion10() {
  const char* dir = std::getenv("LGGD_CORA_DIR");
  if (dir == nullptr) return {Status::Skipped, "LGGD_CORA_DIR not set"};
  const std::filesystem::path root(dir);
  const auto ds = load_dataset(root / "graph.tsv", root / "features.csv", root / "labels.txt", std::nullopt);
  std::vector<double> raw, ggd, lggd;
  for (std::uint64_t s = 0; s < 10; ++s) {
    SbmRun r{ds, make_splits(ds.labels, std::vector<double>{0.025, 0.025, 0.95}, s), {}};
    r.boundary = cli::boundary_from_split(r.split, ds.labels, ds.num_classes);
    const SolverConfig cfg;
    const auto g = generate_ggd(ds.graph, r.boundary, PotentialParams::fixed(-0.5), cfg);
    const auto p1 = pipeline1(r, s, false);
    const auto l = generate_lggd(ds.graph, r.boundary, ds.features, p1.mlp, p1.potential, cfg);
    raw.push_back(gcn_accuracy(r, ds.features, s));
    ggd.push_back(gcn_accuracy(r, g.values, s));
    lggd.push_back(gcn_accuracy(r, l.values, s));
  }
  const double l = 100.0 * mean(lggd), g = 100.0 * mean(ggd), x = 100.0 * mean(raw);
  return pass_if(std::abs(l - 80.18) <= 3.0 && g < x, fmt("LGGD %.2f, GGD %.2f, raw %.2f", l, g, x));
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIPPED";
    if (o.status == Status::Fail) ++failures;
    std::printf("%s criterion %d %s: %s (%.1f s)\n", tag, id, name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  };
  report(1, "steady-linf-equals-dijkstra", criterion1);
  report(2, "two-node-closed-form", criterion2);
  report(3, "steady-time-consistency", criterion3);
  report(4, "gradient-finite-differences", criterion4);
  report(5, "robustness-direction", criterion5);
  ClassificationMeans means;
  report(6, "lggd-beats-ggd", [&] {
    means = classification_means();
    return criterion6(means);
  });
  report(7, "learned-rho-non-degradation", [&] { return criterion7(means); });
  report(8, "dynamic-inclusion", criterion8);
  report(9, "integrate-scaling", criterion9);
  report(10, "cora-reference", criterion10);
  return failures == 0 ? 0 : 1;
}
