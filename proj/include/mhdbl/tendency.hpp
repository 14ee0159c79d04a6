#pragma once

#include "mhdbl/state.hpp"

namespace mhdbl {

// -(U.grad) u_a + xi_a and -(U.grad) B_a + eta_a, evaluated pseudo-spectrally
// with one dealiasing pass per component.
inline StateTendency transport_tendency(const State& s, bool with_transport = true) {
  const auto& grid = s.grid_ptr();
  StateTendency out;
  const std::size_t nh = s.u_h.size();
  const auto vel = detail::make_carrier(s.u_h, s.w);
  detail::Carrier mag;
  if (s.magnetic()) mag = detail::make_carrier(s.f_h, s.h);

  for (std::size_t a = 0; a < nh; ++a) {
    Physical acc(grid->size(), 0.0);
    if (with_transport) {
      const Physical adv = detail::convect_physical(vel, s.u_h[a]);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] -= adv[i];
    }
    if (s.magnetic()) {
      const Physical lorentz = detail::convect_physical(mag, s.f_h[a]);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += lorentz[i];
    }
    out.du.push_back(dealias(from_physical(grid, acc)));
  }
  for (std::size_t a = 0; a < s.f_h.size(); ++a) {
    Physical acc(grid->size(), 0.0);
    if (with_transport) {
      const Physical adv = detail::convect_physical(vel, s.f_h[a]);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] -= adv[i];
    }
    const Physical stretch = detail::convect_physical(mag, s.u_h[a]);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += stretch[i];
    out.df.push_back(dealias(from_physical(grid, acc)));
  }
  return out;
}

// eps (d_x^2 + d_y^2) a
inline Field tangential_laplacian(const Field& a) {
  Field out = ddx(a, 2);
  if (a.grid().dim() == 3) out += ddy(a, 2);
  return out;
}

// Right-hand side of the tangentially regularized system:
//   d_t u = -u d_x u - w d_z u + eps d_x^2 u + nu d_z^2 u + xi
//   d_t f = -u d_x f - w d_z f + eps d_x^2 f + mu d_z^2 f + eta
// (3D: the same with the y terms). State must carry reconstructed w and h.
inline StateTendency rhs_regularized(const State& s, double eps, bool with_transport = true) {
  const DomainConfig& cfg = s.grid().config();
  StateTendency out = transport_tendency(s, with_transport);
  for (std::size_t a = 0; a < out.du.size(); ++a) {
    out.du[a].axpy(cfg.nu, d2dz2(s.u_h[a]));
    if (eps != 0.0) out.du[a].axpy(eps, tangential_laplacian(s.u_h[a]));
  }
  for (std::size_t a = 0; a < out.df.size(); ++a) {
    out.df[a].axpy(cfg.mu, d2dz2(s.f_h[a]));
    if (eps != 0.0) out.df[a].axpy(eps, tangential_laplacian(s.f_h[a]));
  }
  return out;
}

// (d_t u_h, d_t f_h) at t = 0 by substituting the equations (order 1 only;
// higher orders come from checkpoint differences).
inline StateTendency initial_time_derivative(const State& s, int order = 1, double eps = 0.0) {
  if (order != 1) throw UsageError("initial_time_derivative supports order 1 only, got " + std::to_string(order));
  return rhs_regularized(s, eps);
}

}  // namespace mhdbl
