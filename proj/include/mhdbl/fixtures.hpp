#pragma once

// Named configurations shared by the tests, the CLI and the acceptance runner.

#include <cmath>
#include <numbers>
#include <vector>

#include "mhdbl/solver.hpp"

namespace mhdbl::fixtures {

// Small analytic data on [0, 2 pi) x [0, 8], stretch 4, nu = 1, mu = 0.8.
inline DomainConfig small_data_domain(int nx = 32, int nz = 129) {
  DomainConfig d;
  d.dim = 2;
  d.Lx = 2.0 * std::numbers::pi;
  d.Nx = nx;
  d.Nz = nz;
  d.Zmax = 8.0;
  d.stretch = 4.0;
  d.nu = 1.0;
  d.mu = 0.8;
  return d;
}

// u0 = a sin(x) z e^{-z^2}, f0 = a cos(x) e^{-z^2}
inline State small_data_state(const GridPtr& grid, double amplitude = 0.01, bool magnetic = true) {
  State s = State::zeros(grid, magnetic);
  s.u_h[0] = sample(grid, [&](double x, double, double z) { return amplitude * std::sin(x) * z * std::exp(-z * z); });
  if (magnetic) s.f_h[0] = sample(grid, [&](double x, double, double z) { return amplitude * std::cos(x) * std::exp(-z * z); });
  return prepare_initial_state(std::move(s));
}

// One rung of the residual ladder: Nz = 32 * 2^r + 1, dt = 4e-3 / 4^r,
// checkpoints every 2^{r+1} steps, so the checkpoint spacing halves with the
// normal spacing while dt follows the parabolic scaling.
struct ResidualRung {
  DomainConfig domain;
  SolverConfig solver;
};

inline ResidualRung residual_rung(int r, double T = 0.2, int nx = 16) {
  ResidualRung rung;
  rung.domain = small_data_domain(nx, 32 * (1 << r) + 1);
  rung.solver.dt = 4e-3 / std::pow(4.0, r);
  rung.solver.T_final = T;
  rung.solver.checkpoint_every = 2 << r;
  return rung;
}

inline Trajectory run_residual_rung(int r, double T = 0.2, double amplitude = 0.01, double eps = 0.0) {
  ResidualRung rung = residual_rung(r, T);
  rung.domain.eps = eps;
  auto grid = make_grid(rung.domain);
  return run_trajectory(small_data_state(grid, amplitude), rung.solver);
}

// Manufactured-solution ladder at Nx = 64: normal rungs Nz 33..257 on
// [0, 40] with stretch 20, temporal rungs dt 0.02..0.0025 at Nz = 129,
// tangential rungs Nx 16, 32, 64.
inline MmsLadder standard_mms_ladder() {
  MmsLadder L;
  L.domain.dim = 2;
  L.domain.Nx = 64;
  L.domain.Zmax = 40.0;
  L.domain.stretch = 20.0;
  L.domain.nu = 1.0;
  L.domain.mu = 0.5;
  L.solver.T_final = 0.2;
  L.solver.checkpoint_every = 1 << 20;
  L.nz_ladder = {33, 65, 129, 257};
  L.dt_for_space = 1e-3;
  L.nz_for_time = 129;
  L.dt_ladder = {0.02, 0.01, 0.005, 0.0025};
  L.nx_ladder = {16, 32, 64};
  return L;
}

}  // namespace mhdbl::fixtures
