#include "lggd/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <sstream>
#include <thread>

#include "lggd/dynamics.hpp"
#include "lggd/error.hpp"
#include "lggd/io.hpp"

namespace lggd {

std::vector<std::size_t> BoundarySpec::all_nodes() const {
  std::vector<std::size_t> out;
  for (const auto& c : classes) out.insert(out.end(), c.begin(), c.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void BoundarySpec::validate(std::size_t n_nodes) const {
  std::size_t total = 0;
  for (const auto& c : classes) {
    for (auto x : c) {
      if (x >= n_nodes) throw Error(ErrorCode::IndexOutOfRange, "boundary node " + std::to_string(x));
    }
    total += c.size();
  }
  if (total == 0) throw Error(ErrorCode::EmptyBoundary, "no boundary nodes");
  if (all_nodes().size() != total) {
    throw Error(ErrorCode::OverlapWithBoundary, "boundary class lists are not disjoint");
  }
}

BoundarySpec BoundarySpec::from_labels(std::span<const std::size_t> nodes, std::span<const int> labels,
                                       std::size_t num_classes) {
  BoundarySpec b;
  b.classes.resize(num_classes);
  for (auto x : nodes) {
    if (x >= labels.size()) throw Error(ErrorCode::IndexOutOfRange, "node " + std::to_string(x));
    const int y = labels[x];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(y) + " of node " + std::to_string(x));
    }
    b.classes[static_cast<std::size_t>(y)].push_back(x);
  }
  for (auto& c : b.classes) std::sort(c.begin(), c.end());
  return b;
}

void SolverConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw Error(ErrorCode::NonpositiveStep, "step_size must be > 0");
  }
  if (!(steady_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "steady_tol must be > 0");
  if (workers == 0) throw Error(ErrorCode::InvalidConfig, "workers must be >= 1");
  double prev = 0.0;
  for (double t : snapshot_times) {
    if (!(t > prev)) throw Error(ErrorCode::InvalidConfig, "snapshot_times must be positive and ascending");
    const double ratio = t / step_size;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
      throw Error(ErrorCode::InvalidConfig, "snapshot time " + io::format_double(t) +
                                                " is not a multiple of step_size " + io::format_double(step_size));
    }
    prev = t;
  }
}

std::vector<std::size_t> SolverConfig::snapshot_steps() const {
  std::vector<std::size_t> steps;
  steps.reserve(snapshot_times.size());
  for (double t : snapshot_times) steps.push_back(static_cast<std::size_t>(std::llround(t / step_size)));
  return steps;
}

namespace {

void check_nodes(std::size_t n, std::span<const std::size_t> nodes) {
  for (auto x : nodes) {
    if (x >= n) throw Error(ErrorCode::IndexOutOfRange, "node " + std::to_string(x));
  }
}

template <typename Fn>
void for_each_class(std::size_t num_classes, unsigned workers, Fn&& fn) {
  if (workers <= 1 || num_classes <= 1) {
    for (std::size_t k = 0; k < num_classes; ++k) fn(k);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t stride = std::min<std::size_t>(workers, num_classes);
  for (std::size_t w = 0; w < stride; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < num_classes; k += stride) fn(k);
    });
  }
}

}  // namespace

NodeField dijkstra(const Graph& g, std::span<const std::size_t> sources) {
  if (sources.empty()) throw Error(ErrorCode::EmptySourceSet, "dijkstra needs at least one source");
  check_nodes(g.num_nodes(), sources);
  NodeField dist(g.num_nodes(), kDistanceCap);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (auto s : sources) {
    dist[s] = 0.0;
    heap.push({0.0, s});
  }
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (const auto& nb : g.neighbors(u)) {
      const double cand = d + 1.0;
      if (cand < dist[nb.node]) {
        dist[nb.node] = cand;
        heap.push({cand, nb.node});
      }
    }
  }
  return dist;
}

std::vector<char> reachability_mask(const Graph& g, std::span<const std::size_t> sources) {
  check_nodes(g.num_nodes(), sources);
  std::vector<char> seen(g.num_nodes(), 0);
  std::vector<std::size_t> stack(sources.begin(), sources.end());
  for (auto s : sources) seen[s] = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (const auto& nb : g.neighbors(u)) {
      if (!seen[nb.node]) {
        seen[nb.node] = 1;
        stack.push_back(nb.node);
      }
    }
  }
  return seen;
}

double local_solve(std::span<const double> neighbor_values, std::span<const double> coeffs, double rhs, Norm norm) {
  if (neighbor_values.empty()) throw Error(ErrorCode::EmptyNeighborhood, "local solve with no neighbors");
  if (neighbor_values.size() != coeffs.size()) throw Error(ErrorCode::SizeMismatch, "values/coeffs length");
  if (norm == Norm::Linf) {
    double best = neighbor_values[0] + rhs / coeffs[0];
    for (std::size_t j = 1; j < neighbor_values.size(); ++j) {
      best = std::min(best, neighbor_values[j] + rhs / coeffs[j]);
    }
    return best;
  }
  std::vector<std::size_t> order(neighbor_values.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return neighbor_values[a] < neighbor_values[b] || (neighbor_values[a] == neighbor_values[b] && a < b);
  });
  // Grow the active set in ascending value order until the piecewise-linear
  // equation is solved inside the current segment.
  double sum_c = 0.0;
  double sum_ca = 0.0;
  double t = 0.0;
  for (std::size_t m = 0; m < order.size(); ++m) {
    const auto j = order[m];
    sum_c += coeffs[j];
    sum_ca += coeffs[j] * neighbor_values[j];
    t = (rhs + sum_ca) / sum_c;
    if (m + 1 == order.size() || t <= neighbor_values[order[m + 1]]) break;
  }
  return t;
}

DistanceField solve_steady(const Graph& g, const BoundarySpec& boundary, std::span<const double> rho,
                           const SolverConfig& cfg) {
  const std::size_t n = g.num_nodes();
  boundary.validate(n);
  if (rho.size() != n) throw Error(ErrorCode::SizeMismatch, "rho length");
  if (!(cfg.steady_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "steady_tol must be > 0");
  const std::size_t max_sweeps = cfg.max_sweeps ? cfg.max_sweeps : 10 * std::max<std::size_t>(n, 1);
  const std::size_t K = boundary.num_classes();
  DistanceField field(K, 1, n, kDistanceCap);

  auto solve_class = [&](std::size_t k) {
    auto f = field.slice(k, 0);
    std::vector<char> is_boundary(n, 0);
    for (auto b : boundary.classes[k]) {
      is_boundary[b] = 1;
      f[b] = 0.0;
    }
    if (boundary.classes[k].empty()) return;
    const auto reachable = reachability_mask(g, boundary.classes[k]);
    std::vector<double> values;
    std::vector<double> coeffs;
    double worst = 0.0;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
      double max_update = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (is_boundary[i] || !reachable[i]) continue;
        values.clear();
        coeffs.clear();
        // The update never exceeds f[i], so neighbors at or above it are inactive.
        for (const auto& nb : g.neighbors(i)) {
          if (f[nb.node] < f[i]) {
            values.push_back(f[nb.node]);
            coeffs.push_back(nb.sqrt_weight);
          }
        }
        if (values.empty()) continue;
        const double updated = std::min(f[i], local_solve(values, coeffs, 1.0 / rho[i], cfg.norm));
        max_update = std::max(max_update, f[i] - updated);
        f[i] = updated;
      }
      if (max_update < cfg.steady_tol) {
        worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (is_boundary[i] || !reachable[i]) continue;
          worst = std::max(worst, std::abs(rho[i] * neg_grad_norm(g, f, i, cfg.norm) - 1.0));
        }
        if (worst <= 10.0 * cfg.steady_tol) return;
      }
    }
    throw Error(ErrorCode::NotConverged, "class " + std::to_string(k) + " after " + std::to_string(max_sweeps) +
                                             " sweeps, max residual " + io::format_double(worst));
  };
  // Classes run in sequence so NotConverged propagates to the caller.
  for (std::size_t k = 0; k < K; ++k) solve_class(k);
  return field;
}

NodeField residual(const Graph& g, std::span<const double> f, std::span<const double> rho, Norm norm,
                   std::span<const std::size_t> boundary) {
  const std::size_t n = g.num_nodes();
  if (f.size() != n || rho.size() != n) throw Error(ErrorCode::SizeMismatch, "field/rho length");
  check_nodes(n, boundary);
  std::vector<char> is_boundary(n, 0);
  for (auto b : boundary) is_boundary[b] = 1;
  NodeField out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = is_boundary[i] ? std::abs(f[i]) : std::abs(rho[i] * neg_grad_norm(g, f, i, norm) - 1.0);
  }
  return out;
}

DistanceField integrate(const Graph& g, const BoundarySpec& boundary, std::span<const double> rho,
                        std::span<const NodeField> phi0, const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t n = g.num_nodes();
  boundary.validate(n);
  const std::size_t K = boundary.num_classes();
  if (rho.size() != n) throw Error(ErrorCode::SizeMismatch, "rho length");
  if (phi0.size() != K) throw Error(ErrorCode::SizeMismatch, "phi0 needs one field per class");
  for (const auto& p : phi0) {
    if (p.size() != n) throw Error(ErrorCode::SizeMismatch, "phi0 field length");
  }
  const auto steps = cfg.snapshot_steps();
  const std::size_t T = steps.size();
  DistanceField field(K, T, n);

  for_each_class(K, cfg.workers, [&](std::size_t k) {
    std::vector<char> frozen(n, 0);
    std::vector<double> y = phi0[k];
    if (cfg.clamp_boundary) {
      for (auto b : boundary.classes[k]) {
        frozen[b] = 1;
        y[b] = 0.0;
      }
    }
    EikonalDynamics dyn(g, rho, cfg.norm, std::move(frozen));
    std::size_t step = 0;
    for (std::size_t s = 0; s < T; ++s) {
      for (; step < steps[s]; ++step) rk4_step(dyn, cfg.step_size, y);
      std::copy(y.begin(), y.end(), field.slice(k, s).begin());
    }
  });
  return field;
}

double distance_map_distortion(std::span<const double> before, std::span<const double> after) {
  if (before.size() != after.size()) throw Error(ErrorCode::SizeMismatch, "distortion inputs differ in length");
  if (before.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) acc += std::abs(after[i] - before[i]) / (before[i] + 1.0);
  return acc / static_cast<double>(before.size());
}

std::string format_distance_field_csv(const DistanceField& field, std::span<const double> snapshot_times) {
  if (snapshot_times.size() != field.num_snapshots()) {
    throw Error(ErrorCode::SizeMismatch, "snapshot_times length");
  }
  std::ostringstream out;
  out << "node,class,t,value\n";
  for (std::size_t x = 0; x < field.num_nodes(); ++x) {
    for (std::size_t k = 0; k < field.num_classes(); ++k) {
      for (std::size_t t = 0; t < field.num_snapshots(); ++t) {
        out << x << ',' << k << ',' << io::format_double(snapshot_times[t]) << ','
            << io::format_double(field.at(k, t, x)) << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace lggd
