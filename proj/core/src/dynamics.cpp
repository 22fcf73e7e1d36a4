#include "lggd/dynamics.hpp"

#include "lggd/error.hpp"

namespace lggd {

EikonalDynamics::EikonalDynamics(const Graph& g, std::span<const double> rho, Norm norm, std::vector<char> frozen)
    : g_(&g), rho_(rho), norm_(norm), frozen_(std::move(frozen)) {
  if (rho.size() != g.num_nodes()) throw Error(ErrorCode::SizeMismatch, "rho length");
  if (frozen_.empty()) frozen_.assign(g.num_nodes(), 0);
  if (frozen_.size() != g.num_nodes()) throw Error(ErrorCode::SizeMismatch, "frozen mask length");
}

void EikonalDynamics::rhs(std::span<const double> u, std::span<double> out) const {
  const std::size_t n = rho_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (frozen_[i]) {
      out[i] = 0.0;
      continue;
    }
    const double ui = u[i];
    double acc = 0.0;
    if (norm_ == Norm::L1) {
      for (const auto& nb : g_->neighbors(i)) {
        const double d = ui - u[nb.node];
        if (d > 0.0) acc += nb.sqrt_weight * d;
      }
    } else {
      for (const auto& nb : g_->neighbors(i)) {
        const double d = ui - u[nb.node];
        if (d > 0.0 && nb.sqrt_weight * d > acc) acc = nb.sqrt_weight * d;
      }
    }
    out[i] = 1.0 - rho_[i] * acc;
  }
}

void EikonalDynamics::vjp(std::span<const double> u, std::span<const double> v, std::span<double> u_bar,
                          std::span<double> rho_bar) const {
  const std::size_t n = rho_.size();
  const bool want_rho = !rho_bar.empty();
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = v[i];
    if (frozen_[i] || vi == 0.0) continue;
    const double ui = u[i];
    const double scale = rho_[i] * vi;
    double norm_value = 0.0;
    if (norm_ == Norm::L1) {
      for (const auto& nb : g_->neighbors(i)) {
        const double d = ui - u[nb.node];
        if (d > 0.0) {
          norm_value += nb.sqrt_weight * d;
          u_bar[i] -= scale * nb.sqrt_weight;
          u_bar[nb.node] += scale * nb.sqrt_weight;
        }
      }
    } else {
      const Neighbor* best = nullptr;
      for (const auto& nb : g_->neighbors(i)) {
        const double d = ui - u[nb.node];
        if (d > 0.0 && nb.sqrt_weight * d > norm_value) {
          norm_value = nb.sqrt_weight * d;
          best = &nb;
        }
      }
      if (best != nullptr) {
        u_bar[i] -= scale * best->sqrt_weight;
        u_bar[best->node] += scale * best->sqrt_weight;
      }
    }
    if (want_rho) rho_bar[i] -= norm_value * vi;
  }
}

void rk4_step(const EikonalDynamics& dyn, double h, std::span<double> y, std::vector<double>* stages) {
  const std::size_t n = y.size();
  std::vector<double> k(4 * n);
  std::vector<double> u(y.begin(), y.end());
  const double coeff[3] = {h / 2, h / 2, h};
  for (int s = 0; s < 4; ++s) {
    if (stages) stages->insert(stages->end(), u.begin(), u.end());
    std::span<double> ks(k.data() + s * n, n);
    dyn.rhs(u, ks);
    if (s < 3) {
      for (std::size_t i = 0; i < n; ++i) u[i] = y[i] + coeff[s] * ks[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += h / 6.0 * (k[i] + 2.0 * k[n + i] + 2.0 * k[2 * n + i] + k[3 * n + i]);
  }
}

void rk4_step_vjp(const EikonalDynamics& dyn, double h, std::span<const double> stages, std::span<double> y_bar,
                  std::span<double> rho_bar) {
  const std::size_t n = y_bar.size();
  if (stages.size() != 4 * n) throw Error(ErrorCode::SizeMismatch, "rk4 stage record");
  // k_bar[s] = dL/dk_s, seeded by the final combination weights.
  std::vector<double> k_bar(4 * n);
  const double w[4] = {h / 6, h / 3, h / 3, h / 6};
  for (int s = 0; s < 4; ++s) {
    for (std::size_t i = 0; i < n; ++i) k_bar[s * n + i] = w[s] * y_bar[i];
  }
  std::vector<double> u_bar(n);
  const double feed[3] = {h / 2, h / 2, h};  // u_{s+1} = y + feed[s] * k_s
  for (int s = 3; s >= 0; --s) {
    std::fill(u_bar.begin(), u_bar.end(), 0.0);
    dyn.vjp(stages.subspan(s * n, n), std::span<const double>(k_bar.data() + s * n, n), u_bar, rho_bar);
    for (std::size_t i = 0; i < n; ++i) {
      y_bar[i] += u_bar[i];
      if (s > 0) k_bar[(s - 1) * n + i] += feed[s - 1] * u_bar[i];
    }
  }
}

}  // namespace lggd
