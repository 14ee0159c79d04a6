#pragma once

#include <vector>

#include "mhdbl/grid.hpp"
#include "mhdbl/parallel.hpp"
#include "mhdbl/state.hpp"

namespace mhdbl {

// Backward-Euler operator (1 + dt eps |k|^2 - dt kappa d_z^2) with homogeneous
// boundary rows, one tridiagonal solve per tangential mode.
struct ImplicitDiffusion {
  double dt = 0.0;
  double kappa = 0.0;  // normal diffusivity (nu or mu)
  double eps = 0.0;    // tangential regularization
  BoundaryKind bottom = BoundaryKind::Dirichlet;
  BoundaryKind top = BoundaryKind::Dirichlet;
};

namespace detail {

// Solves a tridiagonal system in place (Thomas algorithm, no pivoting).
// sub[0] and sup[n-1] are ignored.
inline void thomas(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup, std::span<cplx> x) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = sub[i] / diag[i - 1];
    diag[i] -= m * sup[i - 1];
    x[i] -= m * x[i - 1];
  }
  x[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (x[i] - sup[i] * x[i + 1]) / diag[i];
}

}  // namespace detail

// Returns x with (1 + dt eps |k|^2) x - dt kappa D2 x = rhs in the interior and
// the homogeneous boundary conditions in the first and last rows.
inline Field solve_implicit(const Field& rhs, const ImplicitDiffusion& op) {
  const Grid& g = rhs.grid();
  Field out = rhs;
  const int n = g.nz();
  const double c = op.dt * op.kappa;
  parallel_for(g.nk(), [&](std::size_t k) {
    const double k2 = g.kx()[k] * g.kx()[k] + g.ky()[k] * g.ky()[k];
    const double shift = 1.0 + op.dt * op.eps * k2;
    std::vector<double> sub(n, 0.0), diag(n, 0.0), sup(n, 0.0);
    for (int j = 1; j < n - 1; ++j) {
      const StencilRow& r = g.d2_row(j);
      sub[j] = -c * r.w[0];
      diag[j] = shift - c * r.w[1];
      sup[j] = -c * r.w[2];
    }
    auto x = out.mode(k);
    if (op.bottom == BoundaryKind::Dirichlet) {
      diag[0] = 1.0;
      sup[0] = 0.0;
      x[0] = 0.0;
    } else {
      const StencilRow& r = g.d1_row(0);
      const double f = r.w[2] / sup[1];
      diag[0] = r.w[0] - f * sub[1];
      sup[0] = r.w[1] - f * diag[1];
      x[0] = -f * x[1];
    }
    if (op.top == BoundaryKind::Dirichlet) {
      diag[n - 1] = 1.0;
      sub[n - 1] = 0.0;
      x[n - 1] = 0.0;
    } else {
      const StencilRow& r = g.d1_row(n - 1);
      const double f = r.w[0] / sub[n - 2];
      sub[n - 1] = r.w[1] - f * diag[n - 2];
      diag[n - 1] = r.w[2] - f * sup[n - 2];
      x[n - 1] = -f * x[n - 2];
    }
    detail::thomas(sub, diag, sup, x);
  });
  return out;
}

}  // namespace mhdbl
