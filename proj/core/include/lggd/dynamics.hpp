#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lggd/graph.hpp"

namespace lggd {

/// Right-hand side of the time-dependent eikonal system for one class,
///   F_i(u) = 1 - rho_i |grad^- u|_p(i),
/// with F_i = 0 on frozen (clamped) nodes.
class EikonalDynamics {
 public:
  EikonalDynamics(const Graph& g, std::span<const double> rho, Norm norm, std::vector<char> frozen = {});

  void rhs(std::span<const double> u, std::span<double> out) const;

  /// Vector-Jacobian product at u: u_bar += J_u^T v, rho_bar += (dF/drho)^T v.
  /// rho_bar may be empty when the potential is not trained. The (.)_+ kink
  /// takes subgradient 0.
  void vjp(std::span<const double> u, std::span<const double> v, std::span<double> u_bar,
           std::span<double> rho_bar) const;

  std::size_t size() const noexcept { return rho_.size(); }

 private:
  const Graph* g_;
  std::span<const double> rho_;
  Norm norm_;
  std::vector<char> frozen_;
};

/// Classic fixed-step RK4 on one class's field. When `stages` is non-null the
/// four stage inputs are appended to it (the forward record needed by the
/// reverse pass).
void rk4_step(const EikonalDynamics& dyn, double h, std::span<double> y, std::vector<double>* stages = nullptr);

/// Reverse pass of one rk4_step given its recorded stage inputs. On entry
/// y_bar holds dL/dy_{n+1}; on exit dL/dy_n. rho_bar accumulates.
void rk4_step_vjp(const EikonalDynamics& dyn, double h, std::span<const double> stages, std::span<double> y_bar,
                  std::span<double> rho_bar);

}  // namespace lggd
