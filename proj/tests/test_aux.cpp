#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "common.hpp"
#include "ladder.hpp"
#include "mhdbl/aux_residuals.hpp"

using namespace mhdbl;
using mhdbl::testing::residual_ladder;
using mhdbl::testing::small_data_domain;
using mhdbl::testing::small_data_state;

TEST(AuxInitial, LambdaDeltaAreTangentialDerivativesExactly) {
  auto g = make_grid(small_data_domain(32, 65));
  const State s = small_data_state(g, 0.3);
  const AuxState aux = initial_aux(s);
  ASSERT_EQ(aux.lambda.size(), 1u);
  ASSERT_EQ(aux.delta.size(), 1u);
  EXPECT_TRUE(aux.lambda[0] == ddx(s.u_h[0]));
  EXPECT_TRUE(aux.delta[0] == ddx(s.f_h[0]));
  EXPECT_EQ(max_abs_spectrum(aux.V[0]), 0.0);
  EXPECT_EQ(max_abs_spectrum(aux.U[0]), 0.0);
}

TEST(AuxInitial, ThreeDimensionalComponents) {
  DomainConfig d = small_data_domain(16, 33);
  d.dim = 3;
  d.Ny = 8;
  auto g = make_grid(d);
  State s = State::zeros(g);
  mhdbl::testing::FieldGenerator gen(3);
  s.u_h[0] = gen.smooth(g, 2, true);
  s.u_h[1] = gen.smooth(g, 2, true);
  s.f_h[0] = gen.smooth(g, 2);
  s.f_h[1] = gen.smooth(g, 2);
  s = prepare_initial_state(s);
  const AuxState aux = initial_aux(s);
  ASSERT_EQ(aux.lambda.size(), 4u);
  for (int b = 0; b < 2; ++b)
    for (int a = 0; a < 2; ++a) {
      EXPECT_TRUE(aux.lambda[b * 2 + a] == tangential_derivative(s.u_h[b], a));
      EXPECT_TRUE(aux.delta[b * 2 + a] == tangential_derivative(s.f_h[b], a));
    }
}

TEST(AuxInitial, NonMagneticHasNoDelta) {
  auto g = make_grid(small_data_domain(16, 33));
  EXPECT_TRUE(initial_aux(small_data_state(g, 0.01, false)).delta.empty());
}

TEST(AuxEvolution, ZeroTrajectoryKeepsZeroAux) {
  auto g = make_grid(small_data_domain(16, 33));
  SolverConfig c;
  c.dt = 1e-2;
  c.T_final = 0.05;
  c.checkpoint_every = 1;
  const Trajectory tr = run_trajectory(State::zeros(g), c);
  for (const auto& a : tr.aux) {
    EXPECT_EQ(max_abs_spectrum(a.V[0]), 0.0);
    EXPECT_EQ(max_abs_spectrum(a.lambda[0]), 0.0);
  }
  for (double r : u_equation_residual(tr)) EXPECT_EQ(r, 0.0);
  for (int m = 1; m <= 3; ++m)
    for (double r : psi_m_residual(tr, m)) EXPECT_EQ(r, 0.0);
}

TEST(AuxEvolution, BoundaryConditionsOfV) {
  const Trajectory& tr = residual_ladder()[1];
  const int top = tr.domain.Nz - 1;
  for (const auto& a : tr.aux) {
    const Field& V = a.V[0];
    double bottom = 0.0, slope = 0.0, size = 0.0;
    for (std::size_t k = 0; k < V.grid().nk(); ++k) {
      bottom = std::max(bottom, std::abs(V(k, 0)));
      slope = std::max(slope, std::abs(a.U[0](k, top)));
    }
    size = max_abs_spectrum(a.U[0]);
    EXPECT_EQ(bottom, 0.0);
    EXPECT_LE(slope, 1e-12 * std::max(size, 1e-300));
  }
}

TEST(AuxEvolution, WallCurvatureShrinksUnderRefinement) {
  const auto& ladder = residual_ladder();
  std::vector<double> curv;
  for (const auto& tr : ladder) {
    double m = 0.0;
    for (const auto& a : tr.aux) m = std::max(m, wall_curvature(a));
    curv.push_back(m);
  }
  for (std::size_t i = 0; i + 1 < curv.size(); ++i) EXPECT_LT(curv[i + 1], curv[i]) << i;
}

TEST(AuxEvolution, DesynchronizedTimesRejected) {
  const Trajectory& tr = residual_ladder()[0];
  EXPECT_THROW(advance_U(tr.aux[1], tr.states[0], tr.states[1], tr.solver.dt), UsageError);
  Trajectory bad = tr;
  bad.aux[2].t += 1e-3;
  EXPECT_THROW(u_equation_residual(bad), UsageError);
}

TEST(UEquation, ConvergesAtSchemeOrder) {
  const auto& ladder = residual_ladder();
  std::vector<double> r, neg;
  for (const auto& tr : ladder) {
    r.push_back(centered_max(u_equation_residual(tr)));
    neg.push_back(centered_max(u_equation_residual(tr, -1.0)));
  }
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    EXPECT_GE(r[i] / r[i + 1], 1.8) << "rung " << i;
    // the flipped lambda term leaves an O(1) residual that does not converge
    EXPECT_GE(neg[i + 1], neg[i] - r[i]) << "rung " << i;
  }
  EXPECT_GT(neg.back(), 100.0 * r.back());
}

TEST(PsiM, ResidualsConvergeForFirstThreeOrders) {
  const auto& ladder = residual_ladder();
  for (int m = 1; m <= 3; ++m) {
    std::vector<double> r;
    for (const auto& tr : ladder) r.push_back(centered_max(psi_m_residual(tr, m)));
    for (std::size_t i = 0; i + 1 < r.size(); ++i) EXPECT_GE(r[i] / r[i + 1], 1.8) << "m=" << m << " rung " << i;
  }
}

TEST(PsiM, AtTimeZeroEqualsLambdaDerivatives) {
  const Trajectory& tr = residual_ladder()[0];
  for (int m = 1; m <= 3; ++m) EXPECT_TRUE(psi_m(tr.states[0], tr.aux[0], m) == ddx(tr.states[0].u_h[0], m));
}

TEST(PsiM, RejectsUnsupportedRequests) {
  const Trajectory& tr = residual_ladder()[0];
  EXPECT_THROW(psi_m_residual(tr, 0), UsageError);
  EXPECT_THROW(psi_m_residual(tr, 4), UsageError);
  Trajectory short_tr = tr;
  short_tr.states.resize(2);
  short_tr.aux.resize(2);
  EXPECT_THROW(psi_m_residual(short_tr, 1), UsageError);
  Trajectory no_aux = tr;
  no_aux.aux.clear();
  EXPECT_THROW(u_equation_residual(no_aux), UsageError);
}

TEST(TimeDerivativeSeries, ExactOnQuadraticsWithUnevenSpacing) {
  auto g = make_grid(small_data_domain(16, 33));
  const Field base = small_data_state(g).u_h[0];
  const std::vector<double> t = {0.0, 0.1, 0.25, 0.3, 0.5};
  std::vector<Field> f;
  for (double s : t) f.push_back((1.0 + 2.0 * s + 3.0 * s * s) * base);
  const auto d = time_derivative_series(t, f);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Field expect = (2.0 + 6.0 * t[i]) * base;
    EXPECT_LT(max_abs_spectrum(d[i] - expect), 1e-12 * max_abs_spectrum(base)) << i;
  }
  EXPECT_THROW(time_derivative_series({0.0, 1.0}, {base, base}), UsageError);
}
