#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mhdbl/grid.hpp"

namespace mhdbl {

// Tangential velocity and magnetic components plus the reconstructed normal
// components. An empty f_h selects the non-magnetic (Prandtl) path.
struct State {
  double t = 0.0;
  std::vector<Field> u_h;  // u (2D) or u, v (3D)
  std::vector<Field> f_h;  // f (2D) or f, g (3D); empty when non-magnetic
  Field w;
  Field h;  // empty when non-magnetic

  const GridPtr& grid_ptr() const { return u_h.front().grid_ptr(); }
  const Grid& grid() const { return u_h.front().grid(); }
  bool magnetic() const noexcept { return !f_h.empty(); }

  static State zeros(const GridPtr& grid, bool magnetic = true) {
    State s;
    const int nh = grid->dim() - 1;
    for (int a = 0; a < nh; ++a) s.u_h.emplace_back(grid);
    if (magnetic)
      for (int a = 0; a < nh; ++a) s.f_h.emplace_back(grid);
    s.w = Field(grid);
    if (magnetic) s.h = Field(grid);
    return s;
  }

  bool operator==(const State& o) const = default;
};

// Time derivatives of the prognostic components.
struct StateTendency {
  std::vector<Field> du;
  std::vector<Field> df;
};

struct NonlinearFields {
  std::vector<Field> xi;   // (B.grad) B_h
  std::vector<Field> eta;  // (B.grad) u_h
};

// d_x c0 (+ d_y c1)
inline Field horizontal_divergence(std::span<const Field> comps) {
  Field div = ddx(comps[0]);
  if (comps.size() > 1) div += ddy(comps[1]);
  return div;
}

// w = -int_0^z div_h u_h dz~, zero at the wall by construction.
inline Field reconstruct_normal(std::span<const Field> comps) {
  return -integrate_z_cumulative(horizontal_divergence(comps));
}

inline void refresh_normal(State& s) {
  s.w = reconstruct_normal(s.u_h);
  if (s.magnetic()) s.h = reconstruct_normal(s.f_h);
}

enum class BoundaryKind { Dirichlet, Neumann };

// Imposes a homogeneous condition at one end of every mode. Neumann uses the
// one-sided second-order derivative stencil, solved for the boundary value.
inline void impose_boundary(Field& a, BoundaryKind kind, bool top) {
  const Grid& g = a.grid();
  const int nz = g.nz();
  const int j = top ? nz - 1 : 0;
  const StencilRow& r = g.d1_row(j);
  for (std::size_t k = 0; k < g.nk(); ++k) {
    auto m = a.mode(k);
    if (kind == BoundaryKind::Dirichlet) {
      m[j] = 0.0;
      continue;
    }
    cplx acc{};
    double self = 0.0;
    for (int i = 0; i < r.size; ++i) {
      if (r.first + i == j)
        self = r.w[i];
      else
        acc += r.w[i] * m[r.first + i];
    }
    m[j] = -acc / self;
  }
}

// No-slip u_h and perfectly conducting f_h at the wall; the truncated far field
// takes u_h = 0 and d_z f_h = 0 at Zmax. w and h are refreshed.
inline State apply_boundary_conditions(State s) {
  for (auto& u : s.u_h) {
    impose_boundary(u, BoundaryKind::Dirichlet, false);
    impose_boundary(u, BoundaryKind::Dirichlet, true);
  }
  for (auto& f : s.f_h) {
    impose_boundary(f, BoundaryKind::Neumann, false);
    impose_boundary(f, BoundaryKind::Neumann, true);
  }
  refresh_normal(s);
  return s;
}

// Largest modulus over modes at one normal level.
inline double level_max(const Field& a, std::size_t j) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.grid().nk(); ++k) m = std::max(m, std::abs(a(k, j)));
  return m;
}

// Rejects initial data incompatible with the wall conditions. The Neumann
// check allows the truncation error of the one-sided stencil.
inline void validate_compatibility(const State& s) {
  const Grid& g = s.grid();
  for (std::size_t a = 0; a < s.u_h.size(); ++a) {
    const double scale = max_abs_spectrum(s.u_h[a]);
    if (level_max(s.u_h[a], 0) > 1e-10 * std::max(scale, 1e-300))
      throw ConfigError("initial velocity component " + std::to_string(a) +
                        " does not vanish at the wall (no-slip compatibility)");
  }
  const double h0 = g.dz_min();
  for (std::size_t a = 0; a < s.f_h.size(); ++a) {
    const Field dz = ddz(s.f_h[a]);
    const Field dzz = d2dz2(s.f_h[a]);
    const double allowed = 1e-10 * std::max(max_abs_spectrum(s.f_h[a]), 1e-300) + 4.0 * h0 * h0 * max_abs_spectrum(dzz);
    if (level_max(dz, 0) > allowed)
      throw ConfigError("initial magnetic component " + std::to_string(a) +
                        " has nonzero normal derivative at the wall (perfect-conductor compatibility)");
  }
}

namespace detail {

// Physical values of the transporting field (tangential components, then the
// normal one) used to form (c . grad) target.
struct Carrier {
  std::vector<Physical> comps;
};

inline Carrier make_carrier(std::span<const Field> tangential, const Field& normal) {
  Carrier c;
  for (const auto& t : tangential) c.comps.push_back(to_physical(t));
  c.comps.push_back(to_physical(normal));
  return c;
}

// Physical values of (c . grad) target, not yet transformed back.
inline Physical convect_physical(const Carrier& c, const Field& target) {
  const std::size_t nh = c.comps.size() - 1;
  Physical out(c.comps[0].size(), 0.0);
  for (std::size_t a = 0; a <= nh; ++a) {
    const Physical d = to_physical(a < nh ? tangential_derivative(target, static_cast<int>(a)) : ddz(target));
    const Physical& ca = c.comps[a];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += ca[i] * d[i];
  }
  return out;
}

}  // namespace detail

// (c . grad) target with c = (tangential, normal); dealiased.
inline Field convect(std::span<const Field> tangential, const Field& normal, const Field& target) {
  const auto carrier = detail::make_carrier(tangential, normal);
  return dealias(from_physical(target.grid_ptr(), detail::convect_physical(carrier, target)));
}

// xi_a = (f d_x + g d_y + h d_z) B_a and eta_a = (f d_x + g d_y + h d_z) u_a.
inline NonlinearFields nonlinear_xi_eta(const State& s) {
  NonlinearFields out;
  if (!s.magnetic()) {
    for (const auto& u : s.u_h) {
      out.xi.emplace_back(u.grid_ptr());
      out.eta.emplace_back(u.grid_ptr());
    }
    return out;
  }
  const auto carrier = detail::make_carrier(s.f_h, s.h);
  for (const auto& f : s.f_h) out.xi.push_back(dealias(from_physical(f.grid_ptr(), detail::convect_physical(carrier, f))));
  for (const auto& u : s.u_h) out.eta.push_back(dealias(from_physical(u.grid_ptr(), detail::convect_physical(carrier, u))));
  return out;
}

// Projects every component of a freshly sampled state onto the retained modes
// and the boundary conditions.
inline State prepare_initial_state(State s) {
  for (auto& u : s.u_h) u = dealias(std::move(u));
  for (auto& f : s.f_h) f = dealias(std::move(f));
  validate_compatibility(s);
  return apply_boundary_conditions(std::move(s));
}

}  // namespace mhdbl
