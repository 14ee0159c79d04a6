#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "common.hpp"
#include "mhdbl/grid.hpp"

using namespace mhdbl;
using mhdbl::testing::domain_2d;

namespace {

double max_interior_error(const Field& a, const std::function<double(double, double)>& exact, int skip = 1) {
  const Physical p = to_physical(a);
  const Grid& g = a.grid();
  double m = 0.0;
  for (std::size_t q = 0; q < g.nk(); ++q)
    for (int j = skip; j < g.nz() - skip; ++j)
      m = std::max(m, std::abs(p[q * g.nz() + j] - exact(g.x_of(q), g.z()[j])));
  return m;
}

}  // namespace

TEST(DomainConfig, RejectsOutOfRangeValues) {
  DomainConfig d = domain_2d(7, 32, 8.0);
  EXPECT_THROW(d.validate(), ConfigError);
  d = domain_2d(16, 15, 8.0);
  EXPECT_THROW(d.validate(), ConfigError);
  d = domain_2d(16, 32, 8.0);
  d.ell = 0.5;
  try {
    d.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("domain.ell"), std::string::npos);
  }
  d = domain_2d(16, 32, 8.0);
  d.nu = 0.0;
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(Grid, LevelsAndQuadrature) {
  for (double stretch : {1.0, 4.0, 50.0}) {
    auto g = make_grid(domain_2d(8, 65, 12.5, stretch));
    EXPECT_EQ(g->z().front(), 0.0);
    EXPECT_EQ(g->z().back(), 12.5);
    for (int j = 1; j < g->nz(); ++j) EXPECT_GT(g->z()[j], g->z()[j - 1]);
    double sum = 0.0;
    for (double w : g->quad_weights()) sum += w;
    EXPECT_NEAR(sum, 12.5, 1e-12 * 12.5);
  }
  auto uniform = make_grid(domain_2d(8, 33, 8.0, 1.0));
  EXPECT_NEAR(uniform->dz_min(), uniform->dz_max(), 1e-14);
  auto stretched = make_grid(domain_2d(8, 33, 8.0, 10.0));
  // consecutive spacings grow geometrically: last/first = stretch^{(Nz-2)/(Nz-1)}
  EXPECT_NEAR(stretched->dz_max() / stretched->dz_min(), std::pow(10.0, 31.0 / 32.0), 1e-9);
}

TEST(Grid, WavenumbersHermitianSymmetric) {
  auto g = make_grid(domain_2d(16, 16, 1.0));
  for (std::size_t k = 0; k < g->nk(); ++k) {
    const int m = g->mode_x()[k];
    if (m == -8) continue;
    const std::size_t mirror = static_cast<std::size_t>((16 - k) % 16);
    EXPECT_EQ(g->kx()[mirror], -g->kx()[k]);
  }
}

TEST(Field, HermitianAfterSampling) {
  auto g = make_grid(domain_2d(16, 16, 4.0));
  Field a = sample(g, [](double x, double, double z) { return std::sin(3 * x) * std::exp(-z) + std::cos(x) * z; });
  EXPECT_LE(hermitian_defect(a), 1e-12 * max_abs_spectrum(a));
}

TEST(Ddx, ConstantGivesZero) {
  auto g = make_grid(domain_2d(16, 16, 4.0));
  Field a = sample(g, [](double, double, double z) { return 3.0 + z; });
  EXPECT_EQ(max_abs_spectrum(ddx(a)), 0.0);
}

TEST(Ddx, SineMatchesAnalyticDerivative) {
  DomainConfig d = domain_2d(16, 16, 4.0);
  d.Lx = 3.0;
  auto g = make_grid(d);
  const double k = 2.0 * std::numbers::pi / d.Lx;
  Field a = sample(g, [&](double x, double, double z) { return std::sin(k * x) * std::exp(-z); });
  EXPECT_LE(max_interior_error(ddx(a), [&](double x, double z) { return k * std::cos(k * x) * std::exp(-z); }, 0), 1e-12);
  EXPECT_LE(max_interior_error(ddx(ddx(a)), [&](double x, double z) { return -k * k * std::sin(k * x) * std::exp(-z); }, 0),
            1e-12);
  EXPECT_LE(max_interior_error(ddx(a, 2), [&](double x, double z) { return -k * k * std::sin(k * x) * std::exp(-z); }, 0),
            1e-12);
}

TEST(Ddx, NyquistZeroedForOddOrders) {
  auto g = make_grid(domain_2d(8, 16, 4.0));
  Field a = sample(g, [](double x, double, double) { return std::cos(4 * x); });
  EXPECT_EQ(max_abs_spectrum(ddx(a)), 0.0);
  EXPECT_GT(max_abs_spectrum(ddx(a, 2)), 1.0);
}

TEST(Ddx, SkewAdjoint) {
  auto g = make_grid(domain_2d(16, 33, 6.0, 3.0));
  mhdbl::testing::FieldGenerator gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Field a = gen.smooth(g, 5), b = gen.smooth(g, 5);
    const double s = inner_product(ddx(a), b) + inner_product(a, ddx(b));
    EXPECT_LE(std::abs(s), 1e-10 * l2_norm(a) * l2_norm(b));
  }
}

TEST(Ddz, QuadraticExactOnUniformInterior) {
  auto g = make_grid(domain_2d(8, 32, 3.0));
  Field a = sample(g, [](double, double, double z) { return z * z; });
  EXPECT_LE(max_interior_error(ddz(a), [](double, double z) { return 2 * z; }), 1e-12);
  EXPECT_LE(max_interior_error(d2dz2(a), [](double, double) { return 2.0; }), 1e-10);
  // one-sided end stencils are exact on quadratics as well
  EXPECT_LE(max_interior_error(ddz(a), [](double, double z) { return 2 * z; }, 0), 1e-11);
  EXPECT_LE(max_interior_error(d2dz2(a), [](double, double) { return 2.0; }, 0), 1e-9);
}

TEST(Ddz, ConstantGivesZero) {
  auto g = make_grid(domain_2d(8, 32, 3.0, 5.0));
  Field a = sample(g, [](double x, double, double) { return 1.0 + std::cos(x); });
  EXPECT_LE(max_abs_spectrum(ddz(a)), 1e-12);
}

TEST(Ddz, ExponentialSecondOrderRefinement) {
  double prev = 0.0;
  for (int nz : {33, 65, 129, 257}) {
    auto g = make_grid(domain_2d(8, nz, 4.0));
    Field a = sample(g, [](double, double, double z) { return std::exp(-z); });
    const double err = max_interior_error(ddz(a), [](double, double z) { return -std::exp(-z); }, 0);
    if (prev > 0) {
      EXPECT_NEAR(prev / err, 4.0, 0.4);
    }
    prev = err;
  }
}

TEST(IntegrateZ, PolynomialsExact) {
  auto g = make_grid(domain_2d(8, 40, 5.0, 3.0));
  Field one = sample(g, [](double, double, double) { return 1.0; });
  EXPECT_LE(max_interior_error(integrate_z_cumulative(one), [](double, double z) { return z; }, 0), 1e-12);
  Field lin = sample(g, [](double, double, double z) { return z; });
  EXPECT_LE(max_interior_error(integrate_z_cumulative(lin), [](double, double z) { return z * z / 2; }, 0), 1e-12);
}

TEST(IntegrateZ, CosineSecondOrder) {
  double prev = 0.0;
  for (int nz : {33, 65, 129}) {
    auto g = make_grid(domain_2d(8, nz, 6.0));
    Field a = sample(g, [](double, double, double z) { return std::cos(z); });
    const double err = max_interior_error(integrate_z_cumulative(a), [](double, double z) { return std::sin(z); }, 0);
    if (prev > 0) {
      EXPECT_NEAR(prev / err, 4.0, 0.3);
    }
    prev = err;
  }
}

TEST(IntegrateZ, InvertsDdzAtSecondOrder) {
  double prev = 0.0;
  for (int nz : {33, 65, 129, 257}) {
    auto g = make_grid(domain_2d(8, nz, 5.0, 2.0));
    Field a = sample(g, [](double x, double, double z) { return std::cos(x) * std::exp(-z) * (1 + z); });
    Field back = integrate_z_cumulative(ddz(a));
    const Physical pa = to_physical(a), pb = to_physical(back);
    double err = 0.0;
    for (std::size_t q = 0; q < g->nk(); ++q)
      for (int j = 0; j < nz; ++j)
        err = std::max(err, std::abs(pb[q * nz + j] - (pa[q * nz + j] - pa[q * nz])));
    if (prev > 0) {
      EXPECT_GT(prev / err, 3.5);
    }
    prev = err;
  }
}

TEST(InnerProduct, ZeroSymmetricBilinear) {
  auto g = make_grid(domain_2d(16, 33, 6.0, 3.0));
  mhdbl::testing::FieldGenerator gen(11);
  const Field a = gen.smooth(g), b = gen.smooth(g), c = gen.smooth(g);
  EXPECT_EQ(inner_product_weighted(Field(g), b, 0), 0.0);
  EXPECT_DOUBLE_EQ(inner_product_weighted(a, b, 2), inner_product_weighted(b, a, 2));
  const double lhs = inner_product_weighted(a * 2.0 + c, b, 1);
  const double rhs = 2.0 * inner_product_weighted(a, b, 1) + inner_product_weighted(c, b, 1);
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(rhs));
  EXPECT_THROW(inner_product_weighted(a, Field(make_grid(domain_2d(16, 34, 6.0))), 0), UsageError);
}

// (<z>^{l} e^{-z}, <z>^{l} e^{-z}) with l = 1 on [0, 20] x one period.
TEST(InnerProduct, WeightedExponentialMatchesQuadratureOracle) {
  const double lx = 2.0 * std::numbers::pi;
  auto g = make_grid(domain_2d(8, 4001, 20.0));
  Field a = sample(g, [](double, double, double z) { return std::exp(-z); });
  const double value = inner_product_weighted(a, a, 0);
  // independent 1D trapezoid on the same levels
  double trap = 0.0;
  const auto z = g->z();
  auto integrand = [](double s) { return (1 + s * s) * std::exp(-2 * s); };
  for (int j = 1; j < g->nz(); ++j) trap += 0.5 * (z[j] - z[j - 1]) * (integrand(z[j - 1]) + integrand(z[j]));
  EXPECT_NEAR(value, lx * trap, 1e-12 * value);
  // closed form on the half-line: 1/2 + 1/4; trapezoid error h^2/12 |f'(0)| and a e^{-40} tail
  const double exact = lx * 0.75;
  const double h = z[1];
  EXPECT_NEAR(value, exact, lx * h * h / 12.0 * 2.0 * 1.01 + 1e-12);
  // Richardson on two resolutions reaches the oracle to 1e-8
  auto g2 = make_grid(domain_2d(8, 2001, 20.0));
  Field a2 = sample(g2, [](double, double, double z) { return std::exp(-z); });
  const double coarse = inner_product_weighted(a2, a2, 0);
  EXPECT_NEAR((4 * value - coarse) / 3, exact, 1e-8);
}

TEST(InnerProduct, ParsevalMatchesPhysicalQuadrature) {
  auto g = make_grid(domain_2d(16, 33, 6.0, 3.0));
  mhdbl::testing::FieldGenerator gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Field a = gen.smooth(g, 7);
    const Physical p = to_physical(a);
    double direct = 0.0;
    for (std::size_t q = 0; q < g->nk(); ++q)
      for (int j = 0; j < g->nz(); ++j) direct += g->dx() * g->quad_weights()[j] * p[q * g->nz() + j] * p[q * g->nz() + j];
    EXPECT_NEAR(inner_product_power(a, a, 0.0), direct, 1e-10 * direct);
  }
}

TEST(Dealias, KeepsLowModesAndRemovesHigh) {
  auto g = make_grid(domain_2d(16, 16, 2.0));
  Field a = sample(g, [](double x, double, double) { return std::cos(5 * x) + std::cos(6 * x); });
  const Field d = dealias(a);
  const Physical p = to_physical(d);
  for (std::size_t q = 0; q < g->nk(); ++q) EXPECT_NEAR(p[q * 16], std::cos(5 * g->x_of(q)), 1e-13);
}

TEST(Grid3D, TangentialDerivativesAndParseval) {
  DomainConfig d = domain_2d(8, 17, 4.0);
  d.dim = 3;
  d.Ny = 8;
  d.Ly = 4.0;
  auto g = make_grid(d);
  const double ky = 2 * std::numbers::pi / 4.0;
  Field a = sample(g, [&](double x, double y, double z) { return std::sin(x) * std::cos(ky * y) * std::exp(-z); });
  const Field ay = ddy(a);
  const Physical p = to_physical(ay);
  double err = 0.0;
  for (std::size_t q = 0; q < g->nk(); ++q)
    for (int j = 0; j < 17; ++j)
      err = std::max(err, std::abs(p[q * 17 + j] + ky * std::sin(g->x_of(q)) * std::sin(ky * g->y_of(q)) * std::exp(-g->z()[j])));
  EXPECT_LE(err, 1e-12);
  EXPECT_THROW(ddy(Field(make_grid(domain_2d(8, 17, 4.0)))), UsageError);
}
