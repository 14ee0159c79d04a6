#pragma once

// Residuals of the evolution equations satisfied by the auxiliary fields,
// evaluated along a stored trajectory. Time derivatives come from checkpoint
// differences; norms exclude the two boundary rows.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mhdbl/auxiliary.hpp"
#include "mhdbl/solver.hpp"

namespace mhdbl {

// sqrt(int int |a|^2) over rows margin..Nz-1-margin.
inline double interior_l2(const Field& a, int margin = 1) {
  const Grid& g = a.grid();
  const auto w = g.quad_weights();
  double total = 0.0;
  for (std::size_t k = 0; k < g.nk(); ++k) {
    auto m = a.mode(k);
    for (int j = margin; j < g.nz() - margin; ++j) total += w[j] * std::norm(m[j]);
  }
  return std::sqrt(g.area() * total);
}

// d/dt of a checkpoint series: three-point differences on the (possibly
// nonuniform) times, one-sided three-point formulas at both ends.
inline std::vector<Field> time_derivative_series(const std::vector<double>& t, const std::vector<Field>& f) {
  const std::size_t n = t.size();
  if (n < 3 || f.size() != n) throw UsageError("time derivative needs at least 3 checkpoints");
  std::vector<Field> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i == 0 ? 1 : (i == n - 1 ? n - 2 : i);
    const double t0 = t[c - 1], t1 = t[c], t2 = t[c + 1], x = t[i];
    // derivative of the Lagrange interpolant through (t0, t1, t2) at x
    const double w0 = ((x - t1) + (x - t2)) / ((t0 - t1) * (t0 - t2));
    const double w1 = ((x - t0) + (x - t2)) / ((t1 - t0) * (t1 - t2));
    const double w2 = ((x - t0) + (x - t1)) / ((t2 - t0) * (t2 - t1));
    Field d = w0 * f[c - 1];
    d.axpy(w1, f[c]);
    d.axpy(w2, f[c + 1]);
    out.push_back(std::move(d));
  }
  return out;
}

// Largest value at the checkpoints where the time derivative is centered
// (all but the first and last).
inline double centered_max(const std::vector<double>& series) {
  double m = 0.0;
  for (std::size_t i = 1; i + 1 < series.size(); ++i) m = std::max(m, series[i]);
  return m;
}

namespace detail {

inline void require_aux(const Trajectory& traj, const char* what) {
  if (traj.states.size() < 3) throw UsageError(std::string(what) + ": fewer than 3 checkpoints");
  if (!traj.has_aux()) throw UsageError(std::string(what) + ": trajectory carries no auxiliary fields");
  for (std::size_t i = 0; i < traj.states.size(); ++i) check_sync(traj.aux[i].t, traj.states[i].t, what);
}

// (u.grad_h + w d_z - nu d_z^2) x, products dealiased.
inline Field transport_diffusion(const State& s, const Field& x) {
  Field out = convect(s.u_h, s.w, x);
  out.axpy(-s.grid().config().nu, d2dz2(x));
  return out;
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

// Residual of the U_a equation at every checkpoint (L^2 summed over a):
//   (d_t + u.grad_h + w d_z - nu d_z^2) U_a
//     - [sum_b d_b lambda_{b,a} + (sum_b d_b d_z u_b) V_a + (sum_b d_b u_b) U_a]
// lambda_sign = -1 flips the d_b lambda term (negative control).
inline std::vector<double> u_equation_residual(const Trajectory& traj, double lambda_sign = 1.0) {
  detail::require_aux(traj, "u_equation_residual");
  const std::size_t n = traj.states.size();
  const std::size_t nh = traj.states[0].u_h.size();
  std::vector<double> times = traj.times();
  std::vector<double> out(n, 0.0);
  for (std::size_t a = 0; a < nh; ++a) {
    std::vector<Field> series;
    for (const auto& aux : traj.aux) series.push_back(aux.U[a]);
    const auto dU = time_derivative_series(times, series);
    for (std::size_t i = 0; i < n; ++i) {
      const State& s = traj.states[i];
      const AuxState& aux = traj.aux[i];
      Field r = dU[i] + detail::transport_diffusion(s, aux.U[a]);
      const Field div = horizontal_divergence(s.u_h);
      Field rhs(s.grid_ptr());
      for (std::size_t b = 0; b < nh; ++b) rhs.axpy(lambda_sign, tangential_derivative(aux.lambda[b * nh + a], static_cast<int>(b)));
      rhs += multiply(ddz(div), aux.V[a]);
      rhs += multiply(div, aux.U[a]);
      r -= rhs;
      // row 1 is skipped as well: d_z^2 U there reads the one-sided wall value of d_z V
      const double v = interior_l2(r, 2);
      out[i] = std::sqrt(out[i] * out[i] + v * v);
    }
  }
  return out;
}

// psi_m = d_x^m u - (d_z u) d_x^{m-1} V in 2D, m = 1..3, and the residual of
//   (d_t + u d_x + w d_z - nu d_z^2) psi_m = d_x^m xi + F_m - L_m - (d_z xi) d_x^{m-1} V
// with F_m, L_m the Leibniz sums
//   F_m = -sum_{j=1}^{m} C(m,j) (d_x^j u) d_x^{m-j+1} u - sum_{j=1}^{m-1} C(m,j) (d_x^j w) d_x^{m-j} d_z u
//   L_m = -(d_z u) sum_{j=1}^{m-1} C(m-1,j) [(d_x^j u) d_x^{m-j} V + (d_x^j w) d_x^{m-1-j} U]
//         - 2 nu (d_z^2 u) d_x^{m-1} U.
// With eps > 0 the right side gains eps [d_x^{m+2} u - (d_x^2 d_z u) d_x^{m-1} V].
inline Field psi_m(const State& s, const AuxState& aux, int m) {
  return ddx(s.u_h[0], m) - multiply(ddz(s.u_h[0]), ddx(aux.V[0], m - 1));
}

inline std::vector<double> psi_m_residual(const Trajectory& traj, int m) {
  if (m < 1 || m > 3) throw UsageError("psi_m_residual: m must be in 1..3, got " + std::to_string(m));
  if (traj.domain.dim != 2) throw UsageError("psi_m_residual is defined for the 2D system only");
  detail::require_aux(traj, "psi_m_residual");
  const std::size_t n = traj.states.size();
  const double nu = traj.domain.nu, eps = traj.domain.eps;
  std::vector<Field> psi;
  for (std::size_t i = 0; i < n; ++i) psi.push_back(psi_m(traj.states[i], traj.aux[i], m));
  const auto dpsi = time_derivative_series(traj.times(), psi);
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    const State& s = traj.states[i];
    const AuxState& aux = traj.aux[i];
    const Field& u = s.u_h[0];
    const Field uz = ddz(u);
    const Field Q = ddx(aux.V[0], m - 1);
    const NonlinearFields nl = nonlinear_xi_eta(s);
    const Field xi = nl.xi.empty() ? Field(s.grid_ptr()) : nl.xi[0];

    Field F(s.grid_ptr());
    for (int j = 1; j <= m; ++j) F.axpy(-detail::binomial(m, j), multiply(ddx(u, j), ddx(u, m - j + 1)));
    for (int j = 1; j <= m - 1; ++j) F.axpy(-detail::binomial(m, j), multiply(ddx(s.w, j), ddx(uz, m - j)));

    Field sum(s.grid_ptr());
    for (int j = 1; j <= m - 1; ++j) {
      const double c = detail::binomial(m - 1, j);
      sum.axpy(c, multiply(ddx(u, j), ddx(aux.V[0], m - j)));
      sum.axpy(c, multiply(ddx(s.w, j), ddx(aux.U[0], m - 1 - j)));
    }
    Field L = -multiply(uz, sum);
    L.axpy(-2.0 * nu, multiply(d2dz2(u), ddx(aux.U[0], m - 1)));

    Field rhs = ddx(xi, m) + F - L - multiply(ddz(xi), Q);
    if (eps != 0.0) {
      rhs.axpy(eps, ddx(u, m + 2));
      rhs.axpy(-eps, multiply(ddx(uz, 2), Q));
    }
    const Field r = dpsi[i] + detail::transport_diffusion(s, psi[i]) - rhs;
    out.push_back(interior_l2(r));
  }
  return out;
}

}  // namespace mhdbl
