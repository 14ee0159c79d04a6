#pragma once

// Auxiliary fields that absorb the derivative loss of w: U_a solves a passive
// linear parabolic problem posed on V_a = int_0^z U_a, and lambda/delta are the
// corresponding corrected tangential derivatives of u_h and f_h.

#include <cmath>
#include <string>
#include <vector>

#include "mhdbl/implicit.hpp"
#include "mhdbl/state.hpp"

namespace mhdbl {

struct AuxState {
  double t = 0.0;
  std::vector<Field> V;       // int_0^z U_a, one per tangential direction
  std::vector<Field> U;       // d_z V_a
  std::vector<Field> lambda;  // d_a u_b - (d_z u_b) V_a, index b * nh + a
  std::vector<Field> delta;   // d_a B_b - (d_z B_b) V_a, empty when non-magnetic

  static AuxState zeros(const GridPtr& grid, double t) {
    AuxState aux;
    aux.t = t;
    for (int a = 0; a < grid->dim() - 1; ++a) {
      aux.V.emplace_back(grid);
      aux.U.emplace_back(grid);
    }
    return aux;
  }

  bool operator==(const AuxState&) const = default;
};

// lambda and delta from the current V. At t = 0 (V = 0) the product terms are
// exactly zero, so lambda = d_x u and delta = d_x f bit for bit.
inline AuxState compute_lambda_delta(const State& s, AuxState aux) {
  const std::size_t nh = s.u_h.size();
  auto corrected = [&](const std::vector<Field>& comps) {
    std::vector<Field> out;
    for (std::size_t b = 0; b < nh; ++b) {
      const Field dz = ddz(comps[b]);
      for (std::size_t a = 0; a < nh; ++a) {
        Field v = tangential_derivative(comps[b], static_cast<int>(a));
        v -= multiply(dz, aux.V[a]);
        out.push_back(std::move(v));
      }
    }
    return out;
  };
  aux.lambda = corrected(s.u_h);
  aux.delta = s.magnetic() ? corrected(s.f_h) : std::vector<Field>{};
  return aux;
}

inline AuxState initial_aux(const State& s) { return compute_lambda_delta(s, AuxState::zeros(s.grid_ptr(), s.t)); }

namespace detail {
inline void check_sync(double a, double b, const char* what) {
  if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a)))
    throw UsageError(std::string("desynchronized times in ") + what + ": " + std::to_string(a) + " vs " + std::to_string(b));
}
}  // namespace detail

// Explicit part of (d_t + u d_x + v d_y + w d_z - nu d_z^2) V_a = -d_a w:
// transport by the frozen velocity plus the forcing.
inline Field aux_explicit(const detail::Carrier& vel, const Field& V, const Field& forcing) {
  Physical adv = detail::convect_physical(vel, V);
  for (auto& v : adv) v = -v;
  Field out = dealias(from_physical(V.grid_ptr(), adv));
  out += forcing;
  return out;
}

// One IMEX step of the V-problems from state_now to state_next. Transport
// coefficients are frozen at state_now; the forcing -d_a w is the average of
// both ends. V = 0 at the wall, d_z V = 0 at Zmax.
inline AuxState advance_U(const AuxState& aux, const State& now, const State& next, double dt) {
  detail::check_sync(aux.t, now.t, "advance_U");
  const DomainConfig& cfg = now.grid().config();
  const auto vel = detail::make_carrier(now.u_h, now.w);
  const ImplicitDiffusion half{0.5 * dt, cfg.nu, 0.0, BoundaryKind::Dirichlet, BoundaryKind::Neumann};
  const ImplicitDiffusion full{dt, cfg.nu, 0.0, BoundaryKind::Dirichlet, BoundaryKind::Neumann};
  AuxState out;
  out.t = next.t;
  for (std::size_t a = 0; a < aux.V.size(); ++a) {
    Field forcing = tangential_derivative(now.w, static_cast<int>(a)) + tangential_derivative(next.w, static_cast<int>(a));
    forcing *= -0.5;
    Field stage = aux.V[a];
    stage.axpy(0.5 * dt, aux_explicit(vel, aux.V[a], forcing));
    stage = solve_implicit(stage, half);
    Field rhs = aux.V[a];
    rhs.axpy(dt, aux_explicit(vel, stage, forcing));
    Field V = solve_implicit(rhs, full);
    out.U.push_back(ddz(V));
    out.V.push_back(std::move(V));
  }
  return compute_lambda_delta(next, std::move(out));
}

// d_t V_a by substitution: -(U.grad) V_a + nu d_z^2 V_a - d_a w.
inline std::vector<Field> aux_time_derivative(const State& s, const AuxState& aux) {
  const auto vel = detail::make_carrier(s.u_h, s.w);
  std::vector<Field> out;
  for (std::size_t a = 0; a < aux.V.size(); ++a) {
    Field forcing = -tangential_derivative(s.w, static_cast<int>(a));
    Field dv = aux_explicit(vel, aux.V[a], forcing);
    dv.axpy(s.grid().config().nu, d2dz2(aux.V[a]));
    out.push_back(std::move(dv));
  }
  return out;
}

// max |d_z^2 V_a| at the wall. V = 0 there and the V-equation reduces to
// d_t V = nu d_z^2 V, so this vanishes in the continuum and is only monitored.
inline double wall_curvature(const AuxState& aux) {
  double m = 0.0;
  for (const auto& v : aux.V) {
    const Field c = d2dz2(v);
    for (std::size_t k = 0; k < c.grid().nk(); ++k) m = std::max(m, std::abs(c(k, 0)));
  }
  return m;
}

}  // namespace mhdbl
