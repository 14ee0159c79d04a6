#pragma once

// Discrete half-plane / half-space: periodic tangential directions resolved
// spectrally, a truncated stretched normal direction resolved by finite
// differences and trapezoid quadrature.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mhdbl/errors.hpp"
#include "mhdbl/fft.hpp"

namespace mhdbl {

using cplx = std::complex<double>;

struct DomainConfig {
  int dim = 2;
  double Lx = 2.0 * std::numbers::pi;
  double Ly = 2.0 * std::numbers::pi;  // used only when dim == 3
  double Zmax = 8.0;
  int Nx = 32;
  int Ny = 0;  // 0 in 2D
  int Nz = 64;
  double stretch = 1.0;  // ratio of outermost to wall spacing, 1 = uniform
  double ell = 1.0;
  double nu = 1.0;
  double mu = 1.0;
  double eps = 0.0;

  bool operator==(const DomainConfig&) const = default;

  // Same collocation points; the physical coefficients may differ.
  bool same_layout(const DomainConfig& o) const {
    return dim == o.dim && Lx == o.Lx && Zmax == o.Zmax && Nx == o.Nx && Nz == o.Nz && stretch == o.stretch &&
           (dim == 2 || (Ly == o.Ly && Ny == o.Ny));
  }

  void validate() const {
    auto fail = [](const std::string& key, double value, const std::string& range) {
      std::ostringstream os;
      os << "domain." << key << " = " << value << " outside allowed range " << range;
      throw ConfigError(os.str());
    };
    if (dim != 2 && dim != 3) fail("dim", dim, "{2, 3}");
    if (Nx < 8 || Nx % 2 != 0) fail("Nx", Nx, "even and >= 8");
    if (dim == 3 && (Ny < 8 || Ny % 2 != 0)) fail("Ny", Ny, "even and >= 8");
    if (Nz < 16) fail("Nz", Nz, ">= 16");
    if (!(Lx > 0)) fail("Lx", Lx, "> 0");
    if (dim == 3 && !(Ly > 0)) fail("Ly", Ly, "> 0");
    if (!(Zmax > 0)) fail("Zmax", Zmax, "> 0");
    if (!(stretch >= 1)) fail("stretch", stretch, ">= 1");
    if (!(ell >= 1)) fail("ell", ell, ">= 1");
    if (!(nu > 0)) fail("nu", nu, "> 0");
    if (!(mu > 0)) fail("mu", mu, "> 0");
    if (!(eps >= 0)) fail("eps", eps, ">= 0");
  }
};

// Finite-difference weights for derivatives 0..max_order at x0 from nodes
// (Fornberg 1988). Returns weights[order][node].
inline std::vector<std::vector<double>> fornberg_weights(double x0, std::span<const double> nodes, int max_order) {
  const int n = static_cast<int>(nodes.size());
  std::vector<std::vector<double>> c(max_order + 1, std::vector<double>(n, 0.0));
  c[0][0] = 1.0;
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, max_order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

// One row of a normal-direction stencil: weights applied at nodes first..first+size-1.
struct StencilRow {
  int first = 0;
  int size = 0;
  std::array<double, 4> w{};
};

class Grid {
public:
  explicit Grid(DomainConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.dim == 2) cfg_.Ny = 0;
    build_levels();
    build_modes();
    build_stencils();
    fft_ = detail::TangentialFft::get(cfg_.Nx, cfg_.dim == 3 ? cfg_.Ny : 0, cfg_.Nz);
  }

  const DomainConfig& config() const noexcept { return cfg_; }
  int dim() const noexcept { return cfg_.dim; }
  int nz() const noexcept { return cfg_.Nz; }
  // Number of tangential modes (= number of tangential physical points).
  std::size_t nk() const noexcept { return mode_x_.size(); }
  std::size_t size() const noexcept { return nk() * static_cast<std::size_t>(cfg_.Nz); }
  double area() const noexcept { return cfg_.dim == 3 ? cfg_.Lx * cfg_.Ly : cfg_.Lx; }

  std::span<const double> z() const noexcept { return z_; }
  std::span<const double> quad_weights() const noexcept { return quad_; }
  // Tangential wavenumbers per flattened mode index.
  std::span<const double> kx() const noexcept { return kx_; }
  std::span<const double> ky() const noexcept { return ky_; }
  std::span<const int> mode_x() const noexcept { return mode_x_; }
  std::span<const int> mode_y() const noexcept { return mode_y_; }
  // Wavenumber multipliers for odd derivatives (Nyquist zeroed).
  std::span<const double> kx_odd() const noexcept { return kx_odd_; }
  std::span<const double> ky_odd() const noexcept { return ky_odd_; }
  bool retained(std::size_t k) const noexcept { return retained_[k] != 0; }

  // Tangential physical coordinates of flattened point index p.
  double x_of(std::size_t p) const noexcept {
    const std::size_t ix = cfg_.dim == 3 ? p / cfg_.Ny : p;
    return cfg_.Lx * static_cast<double>(ix) / cfg_.Nx;
  }
  double y_of(std::size_t p) const noexcept {
    if (cfg_.dim != 3) return 0.0;
    return cfg_.Ly * static_cast<double>(p % cfg_.Ny) / cfg_.Ny;
  }
  double dx() const noexcept { return cfg_.Lx / cfg_.Nx; }
  double dy() const noexcept { return cfg_.dim == 3 ? cfg_.Ly / cfg_.Ny : 0.0; }
  double dz_min() const noexcept { return z_[1] - z_[0]; }
  double dz_max() const noexcept {
    double m = 0.0;
    for (std::size_t j = 1; j < z_.size(); ++j) m = std::max(m, z_[j] - z_[j - 1]);
    return m;
  }
  // <z> = (1 + z^2)^{1/2}
  double japanese(std::size_t j) const noexcept { return std::sqrt(1.0 + z_[j] * z_[j]); }

  const StencilRow& d1_row(std::size_t j) const noexcept { return d1_[j]; }
  const StencilRow& d2_row(std::size_t j) const noexcept { return d2_[j]; }

  const detail::TangentialFft& fft() const noexcept { return *fft_; }

private:
  void build_levels() {
    const int n = cfg_.Nz;
    const double s = std::log(cfg_.stretch);
    z_.resize(n);
    for (int j = 0; j < n; ++j) {
      const double eta = static_cast<double>(j) / (n - 1);
      z_[j] = s == 0.0 ? cfg_.Zmax * eta : cfg_.Zmax * std::expm1(s * eta) / std::expm1(s);
    }
    z_.front() = 0.0;
    z_.back() = cfg_.Zmax;
    quad_.assign(n, 0.0);
    for (int j = 1; j < n; ++j) {
      const double h = z_[j] - z_[j - 1];
      quad_[j - 1] += 0.5 * h;
      quad_[j] += 0.5 * h;
    }
  }

  void build_modes() {
    auto signed_mode = [](int i, int n) { return i <= n / 2 - 1 ? i : i - n; };
    const int nx = cfg_.Nx;
    const int ny = cfg_.dim == 3 ? cfg_.Ny : 1;
    const int cut_x = (nx - 1) / 3;
    const int cut_y = (cfg_.dim == 3 ? cfg_.Ny - 1 : 0) / 3;
    for (int ix = 0; ix < nx; ++ix) {
      for (int iy = 0; iy < ny; ++iy) {
        const int mx = signed_mode(ix, nx);
        const int my = cfg_.dim == 3 ? signed_mode(iy, cfg_.Ny) : 0;
        mode_x_.push_back(mx);
        mode_y_.push_back(my);
        const double kx = 2.0 * std::numbers::pi * mx / cfg_.Lx;
        const double ky = cfg_.dim == 3 ? 2.0 * std::numbers::pi * my / cfg_.Ly : 0.0;
        kx_.push_back(kx);
        ky_.push_back(ky);
        kx_odd_.push_back(mx == -nx / 2 ? 0.0 : kx);
        ky_odd_.push_back(cfg_.dim == 3 && my == -cfg_.Ny / 2 ? 0.0 : ky);
        retained_.push_back(std::abs(mx) <= cut_x && std::abs(my) <= cut_y ? 1 : 0);
      }
    }
  }

  void build_stencils() {
    const int n = cfg_.Nz;
    d1_.resize(n);
    d2_.resize(n);
    auto make = [&](int j, int first, int size, int order) {
      StencilRow row;
      row.first = first;
      row.size = size;
      const auto w = fornberg_weights(z_[j], std::span<const double>(z_.data() + first, size), order);
      for (int i = 0; i < size; ++i) row.w[i] = w[order][i];
      return row;
    };
    for (int j = 0; j < n; ++j) {
      if (j == 0) {
        d1_[j] = make(j, 0, 3, 1);
        d2_[j] = make(j, 0, 4, 2);
      } else if (j == n - 1) {
        d1_[j] = make(j, n - 3, 3, 1);
        d2_[j] = make(j, n - 4, 4, 2);
      } else {
        d1_[j] = make(j, j - 1, 3, 1);
        d2_[j] = make(j, j - 1, 3, 2);
      }
    }
  }

  DomainConfig cfg_;
  std::vector<double> z_, quad_;
  std::vector<double> kx_, ky_, kx_odd_, ky_odd_;
  std::vector<int> mode_x_, mode_y_;
  std::vector<unsigned char> retained_;
  std::vector<StencilRow> d1_, d2_;
  std::shared_ptr<const detail::TangentialFft> fft_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(const DomainConfig& cfg) { return std::make_shared<const Grid>(cfg); }

// One scalar unknown: complex tangential spectrum at each normal level,
// stored mode-major ([k][z]). Physical values are real.
class Field {
public:
  Field() = default;
  explicit Field(GridPtr grid) : grid_(std::move(grid)), data_(grid_->size(), cplx{}) {}

  const Grid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  bool empty() const noexcept { return !grid_; }

  std::span<cplx> spectrum() noexcept { return data_; }
  std::span<const cplx> spectrum() const noexcept { return data_; }
  std::span<cplx> mode(std::size_t k) noexcept { return {data_.data() + k * grid_->nz(), static_cast<std::size_t>(grid_->nz())}; }
  std::span<const cplx> mode(std::size_t k) const noexcept {
    return {data_.data() + k * grid_->nz(), static_cast<std::size_t>(grid_->nz())};
  }
  cplx& operator()(std::size_t k, std::size_t j) noexcept { return data_[k * grid_->nz() + j]; }
  const cplx& operator()(std::size_t k, std::size_t j) const noexcept { return data_[k * grid_->nz() + j]; }

  bool same_grid(const Field& o) const noexcept {
    return grid_ && o.grid_ && (grid_ == o.grid_ || grid_->config().same_layout(o.grid_->config()));
  }

  Field& operator+=(const Field& o) {
    check(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Field& operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
  }
  // this += s * o
  Field& axpy(double s, const Field& o) {
    check(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend Field operator-(Field a) { return a *= -1.0; }

  bool operator==(const Field& o) const { return (empty() && o.empty()) || (same_grid(o) && data_ == o.data_); }

private:
  void check(const Field& o) const {
    if (!same_grid(o)) throw UsageError("field grid mismatch");
  }

  GridPtr grid_;
  std::vector<cplx> data_;
};

// Physical values, tangential point major ([p][z]).
using Physical = std::vector<double>;

inline Physical to_physical(const Field& a) {
  const Grid& g = a.grid();
  std::vector<cplx> buf(a.spectrum().begin(), a.spectrum().end());
  g.fft().backward(buf.data(), buf.data());
  Physical out(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real();
  return out;
}

inline Field from_physical(const GridPtr& grid, std::span<const double> values) {
  if (values.size() != grid->size()) throw UsageError("physical array size does not match grid");
  Field out(grid);
  auto spec = out.spectrum();
  for (std::size_t i = 0; i < values.size(); ++i) spec[i] = values[i];
  grid->fft().forward(spec.data(), spec.data());
  const double scale = 1.0 / static_cast<double>(grid->nk());
  for (auto& v : spec) v *= scale;
  return out;
}

// 2/3-rule truncation of tangential modes.
inline Field dealias(Field a) {
  const Grid& g = a.grid();
  for (std::size_t k = 0; k < g.nk(); ++k)
    if (!g.retained(k))
      for (auto& v : a.mode(k)) v = 0.0;
  return a;
}

// Samples fn(x, y, z) on the grid. In 2D y is 0.
inline Field sample(const GridPtr& grid, const std::function<double(double, double, double)>& fn) {
  Physical values(grid->size());
  const auto z = grid->z();
  for (std::size_t p = 0; p < grid->nk(); ++p)
    for (int j = 0; j < grid->nz(); ++j) values[p * grid->nz() + j] = fn(grid->x_of(p), grid->y_of(p), z[j]);
  return from_physical(grid, values);
}

// Dealiased pointwise product.
inline Field multiply(const Field& a, const Field& b) {
  if (!a.same_grid(b)) throw UsageError("field grid mismatch");
  Physical pa = to_physical(a);
  const Physical pb = to_physical(b);
  for (std::size_t i = 0; i < pa.size(); ++i) pa[i] *= pb[i];
  return dealias(from_physical(a.grid_ptr(), pa));
}

// Tangential derivative of the given order along x (axis 0) or y (axis 1).
// Odd derivatives annihilate the Nyquist mode.
inline Field tangential_derivative(const Field& a, int axis, int order = 1) {
  const Grid& g = a.grid();
  if (axis == 1 && g.dim() != 3) throw UsageError("y derivative requested on a 2D grid");
  if (order < 0) throw UsageError("negative derivative order");
  if (order == 0) return a;
  Field out(a.grid_ptr());
  const auto k_all = axis == 0 ? g.kx() : g.ky();
  const auto k_odd = axis == 0 ? g.kx_odd() : g.ky_odd();
  for (std::size_t k = 0; k < g.nk(); ++k) {
    const double kk = order % 2 == 1 ? k_odd[k] : k_all[k];
    double mag = 1.0;
    for (int i = 0; i < order; ++i) mag *= kk;
    // i^order cycles through 1, i, -1, -i
    static constexpr std::array<cplx, 4> unit{cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    const cplx factor = unit[order % 4] * mag;
    auto src = a.mode(k);
    auto dst = out.mode(k);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] = factor * src[j];
  }
  return out;
}

inline Field ddx(const Field& a, int order = 1) { return tangential_derivative(a, 0, order); }
inline Field ddy(const Field& a, int order = 1) { return tangential_derivative(a, 1, order); }

namespace detail {
template <typename RowFn>
Field apply_normal_stencil(const Field& a, RowFn row_of) {
  const Grid& g = a.grid();
  Field out(a.grid_ptr());
  const int nz = g.nz();
  for (std::size_t k = 0; k < g.nk(); ++k) {
    auto src = a.mode(k);
    auto dst = out.mode(k);
    for (int j = 0; j < nz; ++j) {
      const StencilRow& r = row_of(j);
      cplx acc{};
      for (int i = 0; i < r.size; ++i) acc += r.w[i] * src[r.first + i];
      dst[j] = acc;
    }
  }
  return out;
}
}  // namespace detail

// Second-order normal derivative: centered in the interior, one-sided at both ends.
inline Field ddz(const Field& a) {
  return detail::apply_normal_stencil(a, [&](int j) -> const StencilRow& { return a.grid().d1_row(j); });
}

inline Field d2dz2(const Field& a) {
  return detail::apply_normal_stencil(a, [&](int j) -> const StencilRow& { return a.grid().d2_row(j); });
}

inline Field ddz_n(Field a, int order) {
  for (int i = 0; i < order; ++i) a = ddz(a);
  return a;
}

// F(z) = int_0^z a dz~ by cumulative trapezoid; F(0) = 0 exactly.
inline Field integrate_z_cumulative(const Field& a) {
  const Grid& g = a.grid();
  Field out(a.grid_ptr());
  const auto z = g.z();
  for (std::size_t k = 0; k < g.nk(); ++k) {
    auto src = a.mode(k);
    auto dst = out.mode(k);
    dst[0] = 0.0;
    for (std::size_t j = 1; j < src.size(); ++j) dst[j] = dst[j - 1] + 0.5 * (z[j] - z[j - 1]) * (src[j - 1] + src[j]);
  }
  return out;
}

// Multiplies every level by <z>^power.
inline Field weight_japanese(Field a, double power) {
  const Grid& g = a.grid();
  for (std::size_t k = 0; k < g.nk(); ++k) {
    auto m = a.mode(k);
    for (std::size_t j = 0; j < m.size(); ++j) m[j] *= std::pow(g.japanese(j), power);
  }
  return a;
}

// int int <z>^{2 power} a b dx dz, Parseval in the tangential variables and
// trapezoid quadrature in z.
inline double inner_product_power(const Field& a, const Field& b, double power) {
  if (!a.same_grid(b)) throw UsageError("inner product of fields on different grids");
  const Grid& g = a.grid();
  const auto w = g.quad_weights();
  std::vector<double> level_weight(g.nz());
  for (int j = 0; j < g.nz(); ++j) level_weight[j] = w[j] * (power == 0.0 ? 1.0 : std::pow(g.japanese(j), 2.0 * power));
  double total = 0.0;
  for (std::size_t k = 0; k < g.nk(); ++k) {
    auto ma = a.mode(k);
    auto mb = b.mode(k);
    double s = 0.0;
    for (int j = 0; j < g.nz(); ++j) s += level_weight[j] * (ma[j].real() * mb[j].real() + ma[j].imag() * mb[j].imag());
    total += s;
  }
  return g.area() * total;
}

// (<z>^{ell+j} a, <z>^{ell+j} b)_{L^2}
inline double inner_product_weighted(const Field& a, const Field& b, int j) {
  if (j < 0) throw UsageError("weight index j must be non-negative");
  return inner_product_power(a, b, a.grid().config().ell + j);
}

inline double inner_product(const Field& a, const Field& b) { return inner_product_power(a, b, 0.0); }

inline double l2_norm(const Field& a) { return std::sqrt(std::max(0.0, inner_product(a, a))); }

inline double max_abs(const Physical& p) {
  double m = 0.0;
  for (double v : p) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_spectrum(const Field& a) {
  double m = 0.0;
  for (const auto& v : a.spectrum()) m = std::max(m, std::abs(v));
  return m;
}

// max |a(-k,z) - conj(a(k,z))| over modes whose mirror exists (Nyquist excluded).
inline double hermitian_defect(const Field& a) {
  const Grid& g = a.grid();
  const int nx = g.config().Nx;
  const int ny = g.dim() == 3 ? g.config().Ny : 1;
  double worst = 0.0;
  for (std::size_t k = 0; k < g.nk(); ++k) {
    const int mx = g.mode_x()[k];
    const int my = g.mode_y()[k];
    if (mx == -nx / 2 || (g.dim() == 3 && my == -g.config().Ny / 2)) continue;
    const int ix = (-mx + nx) % nx;
    const int iy = g.dim() == 3 ? (-my + ny) % ny : 0;
    const std::size_t mirror = static_cast<std::size_t>(ix) * ny + iy;
    auto ma = a.mode(k);
    auto mb = a.mode(mirror);
    for (std::size_t j = 0; j < ma.size(); ++j) worst = std::max(worst, std::abs(mb[j] - std::conj(ma[j])));
  }
  return worst;
}

// Values at one normal level as a physical tangential slice.
inline std::vector<double> level_values(const Field& a, std::size_t j) {
  const Physical p = to_physical(a);
  const Grid& g = a.grid();
  std::vector<double> out(g.nk());
  for (std::size_t q = 0; q < g.nk(); ++q) out[q] = p[q * g.nz() + j];
  return out;
}

}  // namespace mhdbl
