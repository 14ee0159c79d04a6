#pragma once

#include <algorithm>
#include <chrono>
#include <numbers>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mhdbl/auxiliary.hpp"
#include "mhdbl/implicit.hpp"
#include "mhdbl/tendency.hpp"

namespace mhdbl {

struct SolverConfig {
  double dt = 1e-3;
  double T_final = 0.1;
  double cfl_safety = 0.5;
  bool imex = true;           // implicit nu/mu d_z^2 and eps d_x^2; false = fully explicit RK2
  int checkpoint_every = 10;  // steps between checkpoints
  bool transport = true;      // false zeroes the u.grad terms (diffusion test mode)
  bool track_aux = true;      // advance the V-problems in lockstep

  bool operator==(const SolverConfig&) const = default;

  int steps() const { return static_cast<int>(std::llround(T_final / dt)); }

  void validate() const {
    auto fail = [](const std::string& key, double v, const std::string& range) {
      std::ostringstream os;
      os << "solver." << key << " = " << v << " outside allowed range " << range;
      throw ConfigError(os.str());
    };
    if (!(dt > 0)) fail("dt", dt, "> 0");
    if (!(T_final > 0)) fail("T_final", T_final, "> 0");
    if (!(cfl_safety > 0 && cfl_safety <= 1)) fail("cfl_safety", cfl_safety, "(0, 1]");
    if (checkpoint_every < 1) fail("checkpoint_every", checkpoint_every, ">= 1");
    const double n = T_final / dt;
    if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n) || std::round(n) < 1)
      fail("T_final", T_final, "a positive integer multiple of dt");
  }
};

// Sampled solution: checkpoints (state and, when tracked, auxiliary fields).
struct Trajectory {
  DomainConfig domain;
  SolverConfig solver;
  std::vector<State> states;
  std::vector<AuxState> aux;  // parallel to states when tracked
  bool truncated = false;
  std::string truncation_reason;
  double last_valid_time = 0.0;

  std::vector<double> times() const {
    std::vector<double> t;
    for (const auto& s : states) t.push_back(s.t);
    return t;
  }
  bool has_aux() const { return !aux.empty() && aux.size() == states.size(); }
};

// Extra source terms added to the explicit part (manufactured solutions).
using Forcing = std::function<StateTendency(double t)>;

inline double cfl_limit(const State& s, double safety) {
  const Grid& g = s.grid();
  double lim = std::numeric_limits<double>::infinity();
  auto bound = [&](const Field& a, double spacing) {
    const double m = max_abs(to_physical(a));
    if (m > 0) lim = std::min(lim, spacing / m);
  };
  bound(s.u_h[0], g.dx());
  if (s.u_h.size() > 1) bound(s.u_h[1], g.dy());
  bound(s.w, g.dz_min());
  return safety * lim;
}

inline void check_cfl(const State& s, double dt, double safety, bool imex, bool transport = true) {
  const double lim = transport ? cfl_limit(s, safety) : std::numeric_limits<double>::infinity();
  if (dt > lim) {
    std::ostringstream os;
    os << "CFL violation at t=" << s.t << ": dt=" << dt << " exceeds cfl_safety*min(dx/max|u|, dz_min/max|w|)=" << lim
       << " (ratio " << dt / lim << ")";
    throw NumericError(os.str(), "cfl: dt <= cfl_safety*min(dx/max|u|, dz_min/max|w|)", s.t);
  }
  if (!imex) {
    const auto& cfg = s.grid().config();
    const double dz = s.grid().dz_min();
    const double dlim = safety * dz * dz / (2.0 * std::max(cfg.nu, cfg.mu));
    if (dt > dlim) {
      std::ostringstream os;
      os << "explicit diffusion limit violated: dt=" << dt << " exceeds " << dlim << " (ratio " << dt / dlim << ")";
      throw NumericError(os.str(), "diffusion: dt <= cfl_safety*dz_min^2/(2 max(nu,mu))", s.t);
    }
  }
}

inline bool all_finite(const State& s) {
  auto ok = [](const Field& f) {
    for (const auto& v : f.spectrum())
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  };
  for (const auto& f : s.u_h)
    if (!ok(f)) return false;
  for (const auto& f : s.f_h)
    if (!ok(f)) return false;
  return true;
}

namespace detail {

inline StateTendency explicit_part(const State& s, double t, bool transport, const Forcing& forcing) {
  StateTendency n = transport_tendency(s, transport);
  if (forcing) {
    const StateTendency src = forcing(t);
    for (std::size_t a = 0; a < n.du.size(); ++a) n.du[a] += src.du[a];
    for (std::size_t a = 0; a < n.df.size(); ++a) n.df[a] += src.df[a];
  }
  return n;
}

inline State implicit_update(const State& base, const StateTendency& n, double dt, double eps) {
  const auto& cfg = base.grid().config();
  State out = base;
  const ImplicitDiffusion vel{dt, cfg.nu, eps, BoundaryKind::Dirichlet, BoundaryKind::Dirichlet};
  const ImplicitDiffusion mag{dt, cfg.mu, eps, BoundaryKind::Neumann, BoundaryKind::Neumann};
  for (std::size_t a = 0; a < base.u_h.size(); ++a) {
    Field rhs = base.u_h[a];
    rhs.axpy(dt, n.du[a]);
    out.u_h[a] = solve_implicit(rhs, vel);
  }
  for (std::size_t a = 0; a < base.f_h.size(); ++a) {
    Field rhs = base.f_h[a];
    rhs.axpy(dt, n.df[a]);
    out.f_h[a] = solve_implicit(rhs, mag);
  }
  refresh_normal(out);
  return out;
}

inline State explicit_update(const State& base, const StateTendency& k, double dt) {
  State out = base;
  for (std::size_t a = 0; a < base.u_h.size(); ++a) out.u_h[a].axpy(dt, k.du[a]);
  for (std::size_t a = 0; a < base.f_h.size(); ++a) out.f_h[a].axpy(dt, k.df[a]);
  return apply_boundary_conditions(std::move(out));
}

}  // namespace detail

// One step: midpoint RK2 for transport, Lorentz coupling and forcing; backward
// Euler for nu/mu d_z^2 and eps d_x^2 inside each stage. Boundary conditions are
// folded into the per-mode solves; w and h are reconstructed afterwards.
inline State imex_step(const State& s, double dt, const SolverConfig& cfg, const Forcing& forcing = {}) {
  check_cfl(s, dt, cfg.cfl_safety, cfg.imex, cfg.transport);
  const double eps = s.grid().config().eps;
  State next;
  if (cfg.imex) {
    const StateTendency n0 = detail::explicit_part(s, s.t, cfg.transport, forcing);
    State half = detail::implicit_update(s, n0, 0.5 * dt, eps);
    half.t = s.t + 0.5 * dt;
    const StateTendency n1 = detail::explicit_part(half, half.t, cfg.transport, forcing);
    next = detail::implicit_update(s, n1, dt, eps);
  } else {
    auto full_rhs = [&](const State& x) {
      StateTendency k = rhs_regularized(x, eps, cfg.transport);
      if (forcing) {
        const StateTendency src = forcing(x.t);
        for (std::size_t a = 0; a < k.du.size(); ++a) k.du[a] += src.du[a];
        for (std::size_t a = 0; a < k.df.size(); ++a) k.df[a] += src.df[a];
      }
      return k;
    };
    State half = detail::explicit_update(s, full_rhs(s), 0.5 * dt);
    half.t = s.t + 0.5 * dt;
    next = detail::explicit_update(s, full_rhs(half), dt);
  }
  next = apply_boundary_conditions(std::move(next));
  next.t = s.t + dt;
  if (!all_finite(next)) throw NumericError("non-finite values after step", "nan", s.t);
  return next;
}

// Integrates to T_final, checkpointing every checkpoint_every steps and at the
// end. Stops early (truncated) on NaN or when max|u| exceeds 1e6 times its
// initial value. CFL violations propagate as NumericError.
inline Trajectory run_trajectory(const State& initial, const SolverConfig& cfg, const Forcing& forcing = {}) {
  cfg.validate();
  validate_compatibility(initial);
  Trajectory traj;
  traj.domain = initial.grid().config();
  traj.solver = cfg;
  const int steps = cfg.steps();
  State s = initial;
  s.t = 0.0;
  AuxState aux;
  if (cfg.track_aux) aux = initial_aux(s);
  traj.states.push_back(s);
  if (cfg.track_aux) traj.aux.push_back(aux);

  auto umax = [](const State& x) {
    double m = 0.0;
    for (const auto& u : x.u_h) m = std::max(m, max_abs(to_physical(u)));
    return m;
  };
  const double u0 = umax(s);
  for (int n = 1; n <= steps; ++n) {
    State next;
    try {
      next = imex_step(s, cfg.dt, cfg, forcing);
    } catch (const NumericError& e) {
      if (e.constraint() != "nan") throw;
      traj.truncated = true;
      traj.truncation_reason = e.what();
      traj.last_valid_time = s.t;
      return traj;
    }
    next.t = n * cfg.dt;
    if (cfg.track_aux) aux = advance_U(aux, s, next, cfg.dt);
    s = std::move(next);
    if (u0 > 0 && umax(s) > 1e6 * u0) {
      traj.truncated = true;
      traj.truncation_reason = "blow-up: max|u| exceeded 1e6 times its initial value";
      traj.last_valid_time = s.t;
      traj.states.push_back(s);
      if (cfg.track_aux) traj.aux.push_back(aux);
      return traj;
    }
    if (n % cfg.checkpoint_every == 0 || n == steps) {
      traj.states.push_back(s);
      if (cfg.track_aux) traj.aux.push_back(aux);
    }
  }
  traj.last_valid_time = s.t;
  return traj;
}

// ---------------------------------------------------------------------------
// Manufactured solutions (2D)

// Closed-form values of an exact solution and the derivatives needed for its
// defect in the regularized system.
struct ExactSample {
  double u = 0, ut = 0, ux = 0, uxx = 0, uz = 0, uzz = 0, w = 0;
  double f = 0, ft = 0, fx = 0, fxx = 0, fz = 0, fzz = 0, h = 0;
};

struct ManufacturedSolution {
  std::string name;
  std::function<ExactSample(double t, double x, double z)> eval;
};

inline ManufacturedSolution zero_solution() {
  return {"zero", [](double, double, double) { return ExactSample{}; }};
}

// u* = e^{-t} sin x (1 - e^{-z}) e^{-z},  f* = e^{-t} cos x e^{-z^2}
inline ManufacturedSolution decaying_mode_solution() {
  return {"decaying_mode", [](double t, double x, double z) {
            const double et = std::exp(-t);
            const double e1 = std::exp(-z), e2 = std::exp(-2 * z), g = std::exp(-z * z);
            const double A = e1 - e2, Az = -e1 + 2 * e2, Azz = e1 - 4 * e2;
            const double IA = 0.5 * (1 - e1) * (1 - e1);
            const double IB = 0.5 * std::sqrt(std::numbers::pi) * std::erf(z);
            const double s = std::sin(x), c = std::cos(x);
            ExactSample e;
            e.u = et * s * A;
            e.ut = -e.u;
            e.ux = et * c * A;
            e.uxx = -e.u;
            e.uz = et * s * Az;
            e.uzz = et * s * Azz;
            e.w = -et * c * IA;
            e.f = et * c * g;
            e.ft = -e.f;
            e.fx = -et * s * g;
            e.fxx = -e.f;
            e.fz = et * c * (-2 * z * g);
            e.fzz = et * c * (4 * z * z - 2) * g;
            e.h = et * s * IB;
            return e;
          }};
}

inline State exact_state(const GridPtr& grid, const ManufacturedSolution& sol, double t) {
  State s = State::zeros(grid, true);
  s.u_h[0] = sample(grid, [&](double x, double, double z) { return sol.eval(t, x, z).u; });
  s.f_h[0] = sample(grid, [&](double x, double, double z) { return sol.eval(t, x, z).f; });
  s.t = t;
  refresh_normal(s);
  return s;
}

// Defect of the regularized system on the exact solution.
inline Forcing manufactured_forcing(const GridPtr& grid, const ManufacturedSolution& sol) {
  const DomainConfig cfg = grid->config();
  return [grid, sol, cfg](double t) {
    Physical pu(grid->size()), pf(grid->size());
    const auto z = grid->z();
    for (std::size_t p = 0; p < grid->nk(); ++p) {
      for (int j = 0; j < grid->nz(); ++j) {
        const ExactSample e = sol.eval(t, grid->x_of(p), z[j]);
        const std::size_t i = p * grid->nz() + j;
        pu[i] = e.ut + e.u * e.ux + e.w * e.uz - cfg.eps * e.uxx - cfg.nu * e.uzz - (e.f * e.fx + e.h * e.fz);
        pf[i] = e.ft + e.u * e.fx + e.w * e.fz - cfg.eps * e.fxx - cfg.mu * e.fzz - (e.f * e.ux + e.h * e.uz);
      }
    }
    StateTendency src;
    src.du.push_back(from_physical(grid, pu));
    src.df.push_back(from_physical(grid, pf));
    return src;
  };
}

struct LadderRung {
  int Nx = 0;
  int Nz = 0;
  double dt = 0.0;
  double error_u = 0.0;         // max-norm error against the exact solution
  double error_f = 0.0;
  double diff_to_next = 0.0;    // max-norm difference to the next rung on shared nodes
  double seconds = 0.0;
};

struct ConvergenceTable {
  std::string parameter;         // "z", "t" or "x"
  std::vector<LadderRung> rungs;
  std::vector<double> orders;    // Richardson estimates from consecutive differences
  double observed_order() const {
    return orders.empty() ? std::numeric_limits<double>::quiet_NaN() : *std::min_element(orders.begin(), orders.end());
  }
};

struct MmsLadder {
  DomainConfig domain;                // base configuration (Nz, Nx overridden per rung)
  SolverConfig solver;                // base configuration (dt overridden per rung)
  std::vector<int> nz_ladder;         // nested: (Nz - 1) doubles
  double dt_for_space = 1e-3;
  int nz_for_time = 129;
  std::vector<double> dt_ladder;      // halving
  std::vector<int> nx_ladder;         // tangential check
};

struct MmsReport {
  ConvergenceTable normal;
  ConvergenceTable temporal;
  ConvergenceTable tangential;
};

namespace detail {

struct MmsRun {
  Physical u, f;
  Field su, sf;
  double error_u = 0, error_f = 0;
  double seconds = 0;
};

inline MmsRun run_manufactured(const ManufacturedSolution& sol, DomainConfig dom, SolverConfig scfg) {
  const auto start = std::chrono::steady_clock::now();
  auto grid = make_grid(dom);
  scfg.track_aux = false;
  scfg.checkpoint_every = scfg.steps();
  State s0 = apply_boundary_conditions(exact_state(grid, sol, 0.0));
  const Trajectory traj = run_trajectory(s0, scfg, manufactured_forcing(grid, sol));
  if (traj.truncated) throw NumericError("manufactured run truncated: " + traj.truncation_reason, "nan", traj.last_valid_time);
  const State& end = traj.states.back();
  const State ex = exact_state(grid, sol, end.t);
  MmsRun r;
  r.su = end.u_h[0];
  r.sf = end.f_h[0];
  r.u = to_physical(end.u_h[0]);
  r.f = to_physical(end.f_h[0]);
  r.error_u = max_abs(to_physical(end.u_h[0] - ex.u_h[0]));
  r.error_f = max_abs(to_physical(end.f_h[0] - ex.f_h[0]));
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// max |a - b| over shared nodes; a on the coarser normal grid (stride in z).
inline double nested_difference(const Physical& coarse, int nz_c, const Physical& fine, int nz_f, std::size_t nk) {
  const int stride = (nz_f - 1) / (nz_c - 1);
  double m = 0.0;
  for (std::size_t p = 0; p < nk; ++p)
    for (int j = 0; j < nz_c; ++j)
      m = std::max(m, std::abs(coarse[p * nz_c + j] - fine[p * nz_f + j * stride]));
  return m;
}

// max |a_m - b_m| over the tangential modes of the coarser field (Nyquist
// excluded); both fields share the normal grid.
inline double spectral_difference(const Field& coarse, const Field& fine) {
  const Grid& gc = coarse.grid();
  const Grid& gf = fine.grid();
  const int nxc = gc.config().Nx, nxf = gf.config().Nx;
  double m = 0.0;
  for (std::size_t k = 0; k < gc.nk(); ++k) {
    const int mx = gc.mode_x()[k];
    if (mx == -nxc / 2) continue;
    const std::size_t kf = static_cast<std::size_t>((mx + nxf) % nxf);
    for (int j = 0; j < gc.nz(); ++j) m = std::max(m, std::abs(coarse(k, j) - fine(kf, j)));
  }
  return m;
}

inline void fill_orders(ConvergenceTable& t) {
  for (std::size_t i = 0; i + 2 < t.rungs.size(); ++i) {
    const double a = t.rungs[i].diff_to_next, b = t.rungs[i + 1].diff_to_next;
    t.orders.push_back(a > 0 && b > 0 ? std::log2(a / b) : std::numeric_limits<double>::quiet_NaN());
  }
}

}  // namespace detail

// Runs the forced solver over normal, temporal and tangential refinement
// ladders. Orders come from differences of consecutive rungs on shared nodes,
// which cancels the error contribution of the parameter held fixed.
inline MmsReport manufactured_forcing_residual(const ManufacturedSolution& sol, const MmsLadder& ladder) {
  MmsReport rep;
  rep.normal.parameter = "z";
  std::vector<detail::MmsRun> runs;
  for (int nz : ladder.nz_ladder) {
    DomainConfig d = ladder.domain;
    d.Nz = nz;
    SolverConfig s = ladder.solver;
    s.dt = ladder.dt_for_space;
    runs.push_back(detail::run_manufactured(sol, d, s));
    rep.normal.rungs.push_back({d.Nx, nz, s.dt, runs.back().error_u, runs.back().error_f, 0.0, runs.back().seconds});
  }
  const std::size_t nk_x = static_cast<std::size_t>(ladder.domain.Nx);
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    const int a = ladder.nz_ladder[i], b = ladder.nz_ladder[i + 1];
    rep.normal.rungs[i].diff_to_next = std::max(detail::nested_difference(runs[i].u, a, runs[i + 1].u, b, nk_x),
                                                detail::nested_difference(runs[i].f, a, runs[i + 1].f, b, nk_x));
  }
  detail::fill_orders(rep.normal);

  rep.temporal.parameter = "t";
  runs.clear();
  for (double dt : ladder.dt_ladder) {
    DomainConfig d = ladder.domain;
    d.Nz = ladder.nz_for_time;
    SolverConfig s = ladder.solver;
    s.dt = dt;
    runs.push_back(detail::run_manufactured(sol, d, s));
    rep.temporal.rungs.push_back({d.Nx, d.Nz, dt, runs.back().error_u, runs.back().error_f, 0.0, runs.back().seconds});
  }
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    const int nz = ladder.nz_for_time;
    rep.temporal.rungs[i].diff_to_next = std::max(detail::nested_difference(runs[i].u, nz, runs[i + 1].u, nz, nk_x),
                                                  detail::nested_difference(runs[i].f, nz, runs[i + 1].f, nz, nk_x));
  }
  detail::fill_orders(rep.temporal);

  rep.tangential.parameter = "x";
  runs.clear();
  for (int nx : ladder.nx_ladder) {
    DomainConfig d = ladder.domain;
    d.Nx = nx;
    d.Nz = ladder.nz_for_time;
    SolverConfig s = ladder.solver;
    s.dt = ladder.dt_for_space;
    runs.push_back(detail::run_manufactured(sol, d, s));
    rep.tangential.rungs.push_back({nx, d.Nz, s.dt, runs.back().error_u, runs.back().error_f, 0.0, runs.back().seconds});
  }
  for (std::size_t i = 0; i + 1 < runs.size(); ++i)
    rep.tangential.rungs[i].diff_to_next = std::max(detail::spectral_difference(runs[i].su, runs[i + 1].su),
                                                    detail::spectral_difference(runs[i].sf, runs[i + 1].sf));
  return rep;
}

}  // namespace mhdbl
