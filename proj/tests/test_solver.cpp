#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "common.hpp"
#include "mhdbl/diagnostics.hpp"
#include "mhdbl/solver.hpp"

using namespace mhdbl;
using mhdbl::testing::domain_2d;
using mhdbl::testing::small_data_domain;
using mhdbl::testing::small_data_state;

namespace {

bool identical(const State& a, const State& b) { return a == b; }

double max_spectrum(const std::vector<Field>& comps) {
  double m = 0.0;
  for (const auto& c : comps) m = std::max(m, max_abs_spectrum(c));
  return m;
}

State strip_magnetic(const State& s) {
  State out = s;
  for (auto& f : out.f_h) f = Field(s.grid_ptr());
  out = apply_boundary_conditions(out);
  refresh_normal(out);
  return out;
}

}  // namespace

TEST(SolverConfig, RejectsOutOfRangeValues) {
  SolverConfig c;
  EXPECT_NO_THROW(c.validate());
  c.dt = 0.0;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("solver.dt = 0 outside allowed range"), std::string::npos) << e.what();
  }
  c = SolverConfig{};
  c.cfl_safety = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SolverConfig{};
  c.T_final = 0.10005;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SolverConfig{};
  c.checkpoint_every = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Tendency, ZeroStateGivesZero) {
  auto g = make_grid(small_data_domain(16, 33));
  const StateTendency t = rhs_regularized(State::zeros(g), 0.1);
  EXPECT_EQ(max_spectrum(t.du), 0.0);
  EXPECT_EQ(max_spectrum(t.df), 0.0);
}

TEST(Tendency, ZeroMagneticFieldReducesToPrandtl) {
  auto g = make_grid(small_data_domain(16, 33));
  const State mag = strip_magnetic(small_data_state(g));
  const State prandtl = small_data_state(g, 0.01, false);
  const StateTendency a = rhs_regularized(mag, 0.01);
  const StateTendency b = rhs_regularized(prandtl, 0.01);
  EXPECT_TRUE(a.du == b.du);
  EXPECT_EQ(max_spectrum(a.df), 0.0);
}

// u = sin(kx) z (Zmax - z) on a uniform grid: every normal stencil is exact on
// quadratics and the cumulative trapezoid error is O(h^2) with h = 2.4e-4.
TEST(Tendency, SingleModeMatchesSymbolicEvaluation) {
  DomainConfig d = domain_2d(16, 4097, 1.0);
  d.nu = 0.7;
  auto g = make_grid(d);
  const int k = 2;
  const double L = d.Zmax, nu = d.nu;
  State s = State::zeros(g);
  s.u_h[0] = sample(g, [&](double x, double, double z) { return std::sin(k * x) * z * (L - z); });
  s = apply_boundary_conditions(s);
  refresh_normal(s);
  const StateTendency t = rhs_regularized(s, 0.0);
  const Physical got = to_physical(t.du[0]);
  double worst = 0.0, scale = 0.0;
  for (std::size_t p = 0; p < g->nk(); ++p) {
    const double x = g->x_of(p);
    for (int j = 0; j < g->nz(); ++j) {
      const double z = g->z()[j];
      const double phi = z * (L - z), dphi = L - 2 * z, ddphi = -2.0, iphi = L * z * z / 2 - z * z * z / 3;
      const double u = std::sin(k * x) * phi, ux = k * std::cos(k * x) * phi;
      const double uz = std::sin(k * x) * dphi, uzz = std::sin(k * x) * ddphi;
      const double w = -k * std::cos(k * x) * iphi;
      const double exact = -u * ux - w * uz + nu * uzz;
      worst = std::max(worst, std::abs(got[p * g->nz() + j] - exact));
      scale = std::max(scale, std::abs(exact));
    }
  }
  EXPECT_LT(worst, 1e-8 * scale);
}

TEST(ImexStep, ZeroStateStaysZero) {
  auto g = make_grid(small_data_domain(16, 33));
  const State s = State::zeros(g);
  const State n = imex_step(s, 1e-3, SolverConfig{});
  EXPECT_EQ(max_spectrum(n.u_h), 0.0);
  EXPECT_EQ(max_spectrum(n.f_h), 0.0);
}

TEST(ImexStep, PureDiffusionDecayFactor) {
  DomainConfig d = domain_2d(16, 65, 4.0);
  d.nu = 0.9;
  d.eps = 0.05;
  auto g = make_grid(d);
  const int k = 3, n = 2;
  const double h = d.Zmax / (d.Nz - 1);
  const double q2 = 4.0 / (h * h) * std::pow(std::sin(n * std::numbers::pi * h / (2.0 * d.Zmax)), 2);
  const double lambda = d.nu * q2 + d.eps * k * k;
  State s = State::zeros(g, false);
  s.u_h[0] = sample(g, [&](double x, double, double z) { return std::sin(k * x) * std::sin(n * std::numbers::pi * z / d.Zmax); });
  s = apply_boundary_conditions(s);
  refresh_normal(s);
  SolverConfig cfg;
  cfg.transport = false;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    const State next = imex_step(s, dt, cfg);
    const std::size_t km = static_cast<std::size_t>(k);
    const int jm = (d.Nz - 1) / (2 * n);
    const double factor = std::abs(next.u_h[0](km, jm)) / std::abs(s.u_h[0](km, jm));
    EXPECT_NEAR(factor, 1.0 / (1.0 + dt * lambda), 1e-12);
    EXPECT_LT(std::abs(factor - std::exp(-lambda * dt)), 0.6 * lambda * lambda * dt * dt);
  }
}

TEST(ImexStep, SelfConvergenceFirstOrderInTime) {
  auto g = make_grid(small_data_domain(16, 65));
  const State s0 = small_data_state(g, 0.2);
  auto run = [&](double dt) {
    SolverConfig c;
    c.dt = dt;
    c.T_final = 0.1;
    c.checkpoint_every = 1 << 20;
    c.track_aux = false;
    return run_trajectory(s0, c).states.back();
  };
  const State ref = run(1.25e-4);
  std::vector<double> err;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    const State a = run(dt);
    err.push_back(std::max(max_abs(to_physical(a.u_h[0] - ref.u_h[0])), max_abs(to_physical(a.f_h[0] - ref.f_h[0]))));
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    EXPECT_GT(err[i] / err[i + 1], 1.7) << i;
    EXPECT_LT(err[i] / err[i + 1], 2.6) << i;
  }
}

TEST(ImexStep, CflViolationReported) {
  auto g = make_grid(small_data_domain(32, 65));
  const State s = small_data_state(g, 50.0);
  try {
    imex_step(s, 0.5, SolverConfig{});
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_EQ(e.constraint(), "cfl: dt <= cfl_safety*min(dx/max|u|, dz_min/max|w|)");
    EXPECT_NE(std::string(e.what()).find("ratio"), std::string::npos);
  }
}

TEST(ImexStep, ExplicitModeObeysDiffusionLimit) {
  auto g = make_grid(small_data_domain(16, 33));
  const State s = small_data_state(g);
  SolverConfig c;
  c.imex = false;
  EXPECT_THROW(imex_step(s, 1e-2, c), NumericError);
  const double dz = g->dz_min();
  const State a = imex_step(s, 0.2 * dz * dz, c);
  c.imex = true;
  const State b = imex_step(s, 0.2 * dz * dz, c);
  EXPECT_LT(max_abs(to_physical(a.u_h[0] - b.u_h[0])), 1e-3 * max_abs(to_physical(s.u_h[0])));
}

TEST(RunTrajectory, ZeroDataGivesZeroTrajectory) {
  auto g = make_grid(small_data_domain(16, 33));
  SolverConfig c;
  c.dt = 1e-2;
  c.T_final = 0.1;
  c.checkpoint_every = 3;
  const Trajectory tr = run_trajectory(State::zeros(g), c);
  ASSERT_EQ(tr.states.size(), 5u);
  EXPECT_DOUBLE_EQ(tr.states.back().t, 0.1);
  for (const auto& s : tr.states) {
    EXPECT_EQ(max_spectrum(s.u_h), 0.0);
    EXPECT_EQ(max_spectrum(s.f_h), 0.0);
  }
  for (std::size_t i = 1; i < tr.states.size(); ++i) EXPECT_GT(tr.states[i].t, tr.states[i - 1].t);
  EXPECT_EQ(tr.states.front().t, 0.0);
}

TEST(RunTrajectory, Deterministic) {
  auto g = make_grid(small_data_domain(16, 65));
  SolverConfig c;
  c.dt = 2e-3;
  c.T_final = 0.05;
  c.checkpoint_every = 5;
  const Trajectory a = run_trajectory(small_data_state(g), c);
  const Trajectory b = run_trajectory(small_data_state(g), c);
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    EXPECT_TRUE(identical(a.states[i], b.states[i]));
    EXPECT_TRUE(a.aux[i] == b.aux[i]);
  }
}

TEST(RunTrajectory, ZeroMagneticFieldStaysZero) {
  auto g = make_grid(small_data_domain(16, 65));
  SolverConfig c;
  c.dt = 2e-3;
  c.T_final = 0.1;
  const Trajectory tr = run_trajectory(strip_magnetic(small_data_state(g, 0.1)), c);
  const Trajectory pr = run_trajectory(small_data_state(g, 0.1, false), c);
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    EXPECT_EQ(max_spectrum(tr.states[i].f_h), 0.0);
    EXPECT_TRUE(tr.states[i].u_h == pr.states[i].u_h);
  }
}

TEST(RunTrajectory, NanTruncatesWithLastValidTime) {
  auto g = make_grid(small_data_domain(16, 33));
  Forcing poison = [g](double t) {
    StateTendency src{{Field(g)}, {Field(g)}};
    if (t > 0.0305) {
      Physical p(g->size(), std::numeric_limits<double>::quiet_NaN());
      src.du[0] = from_physical(g, p);
    }
    return src;
  };
  SolverConfig c;
  c.dt = 1e-2;
  c.T_final = 0.1;
  c.checkpoint_every = 1;
  const Trajectory tr = run_trajectory(small_data_state(g), c, poison);
  EXPECT_TRUE(tr.truncated);
  EXPECT_NEAR(tr.last_valid_time, 0.03, 1e-12);
  EXPECT_EQ(tr.states.size(), 4u);
}

TEST(RunTrajectory, BlowUpDetected) {
  auto g = make_grid(small_data_domain(16, 33));
  const Field push = sample(g, [](double x, double, double z) { return 1e7 * std::sin(x) * z * std::exp(-z * z); });
  Forcing blast = [&](double) { return StateTendency{{push}, {Field(g)}}; };
  SolverConfig c;
  c.dt = 1e-3;
  c.T_final = 0.01;
  const Trajectory tr = run_trajectory(small_data_state(g), c, blast);
  EXPECT_TRUE(tr.truncated);
  EXPECT_NE(tr.truncation_reason.find("blow-up"), std::string::npos);
  EXPECT_EQ(tr.states.size(), 2u);
}

TEST(RunTrajectory, RejectsIncompatibleInitialData) {
  auto g = make_grid(small_data_domain(16, 33));
  State s = State::zeros(g);
  s.u_h[0] = sample(g, [](double x, double, double) { return 1.0 + std::sin(x); });
  EXPECT_THROW(run_trajectory(s, SolverConfig{}), ConfigError);
}

// Regression fixture: small analytic data at Nx = 64, Nz = 128 to T = 0.5.
TEST(RunTrajectory, SmallDataFixtureToHalfTime) {
  auto g = make_grid(small_data_domain(64, 128));
  SolverConfig c;
  c.dt = 1e-3;
  c.T_final = 0.5;
  c.checkpoint_every = 100;
  c.track_aux = false;
  const Trajectory tr = run_trajectory(small_data_state(g), c);
  EXPECT_FALSE(tr.truncated);
  ASSERT_EQ(tr.states.size(), 6u);
  const double umax = max_abs(to_physical(tr.states.back().u_h[0]));
  const double fmax = max_abs(to_physical(tr.states.back().f_h[0]));
  std::ifstream in(std::string(MHDBL_SOURCE_DIR) + "/tests/fixtures/small_data_T05.txt");
  ASSERT_TRUE(in.good());
  double ref_u = 0, ref_f = 0;
  in >> ref_u >> ref_f;
  EXPECT_NEAR(umax, ref_u, 1e-9 * ref_u);
  EXPECT_NEAR(fmax, ref_f, 1e-9 * ref_f);
  EXPECT_LT(umax, max_abs(to_physical(tr.states.front().u_h[0])));
}

TEST(RunTrajectory, EpsilonContinuationIsCauchy) {
  auto run = [](double eps) {
    DomainConfig d = small_data_domain(32, 65);
    d.eps = eps;
    auto g = make_grid(d);
    SolverConfig c;
    c.dt = 2.5e-3;
    c.T_final = 0.25;
    c.checkpoint_every = 1 << 20;
    c.track_aux = false;
    return run_trajectory(small_data_state(g), c).states.back();
  };
  const State a = run(1e-2), b = run(1e-3), c = run(1e-4);
  const double d1 = l2_norm(a.u_h[0] - b.u_h[0]), d2 = l2_norm(b.u_h[0] - c.u_h[0]);
  EXPECT_GT(d1, d2);
  EXPECT_GT(d2, 0.0);
}

TEST(RunTrajectory, ThreeDimensionalSmoke) {
  DomainConfig d = small_data_domain(16, 33);
  d.dim = 3;
  d.Ny = 8;
  d.Ly = 2.0 * std::numbers::pi;
  auto g = make_grid(d);
  State s = State::zeros(g);
  s.u_h[0] = sample(g, [](double x, double y, double z) { return 0.05 * std::sin(x + y) * z * std::exp(-z * z); });
  s.u_h[1] = sample(g, [](double x, double, double z) { return 0.05 * std::cos(x) * z * std::exp(-z * z); });
  s.f_h[0] = sample(g, [](double, double y, double z) { return 0.05 * std::cos(y) * std::exp(-z * z); });
  s.f_h[1] = sample(g, [](double x, double y, double z) { return 0.05 * std::sin(x - y) * std::exp(-z * z); });
  s = prepare_initial_state(s);
  SolverConfig c;
  c.dt = 2e-3;
  c.T_final = 0.04;
  c.checkpoint_every = 5;
  const Trajectory tr = run_trajectory(s, c);
  EXPECT_FALSE(tr.truncated);
  const EnergyBudget b = energy_budget(tr);
  for (std::size_t i = 0; i + 1 < b.energy.size(); ++i) EXPECT_LT(b.energy[i + 1], b.energy[i]);
  EXPECT_EQ(tr.aux.back().U.size(), 2u);
  EXPECT_EQ(tr.aux.back().lambda.size(), 4u);
}

TEST(Manufactured, ZeroSolutionHasZeroError) {
  MmsLadder L = fixtures::standard_mms_ladder();
  L.domain.Nx = 16;
  L.nz_ladder = {33, 65};
  L.dt_ladder = {0.02, 0.01};
  L.nx_ladder = {16, 32};
  L.nz_for_time = 33;
  const MmsReport r = manufactured_forcing_residual(zero_solution(), L);
  for (const auto* t : {&r.normal, &r.temporal, &r.tangential})
    for (const auto& rung : t->rungs) {
      EXPECT_EQ(rung.error_u, 0.0);
      EXPECT_EQ(rung.error_f, 0.0);
    }
}

TEST(Manufactured, DecayingModeOrders) {
  const MmsReport r = manufactured_forcing_residual(decaying_mode_solution(), fixtures::standard_mms_ladder());
  EXPECT_GE(r.normal.observed_order(), 1.9);
  EXPECT_GE(r.temporal.observed_order(), 0.9);
  double seconds = 0.0;
  for (const auto* t : {&r.normal, &r.temporal, &r.tangential})
    for (const auto& rung : t->rungs) seconds += rung.seconds;
  EXPECT_LT(seconds, 120.0);
  // errors against the exact solution shrink along the normal ladder
  for (std::size_t i = 0; i + 1 < r.normal.rungs.size(); ++i) EXPECT_LT(r.normal.rungs[i + 1].error_u, r.normal.rungs[i].error_u);
  // doubling Nx: the tangential difference falls below the normal error floor
  const double floor = r.normal.rungs[2].error_u;
  EXPECT_LT(r.tangential.rungs[1].diff_to_next, floor);
}
