#pragma once

// Gevrey seminorms and the composite norm of the auxiliary family, evaluated
// entirely in the log domain:
//   log ||<z>^p d^alpha A|| = 1/2 log sum_k |k^alpha|^2 S_k,
//   S_k = area * sum_z w_z <z>^{2p} |A_k(z)|^2.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mhdbl/aux_residuals.hpp"
#include "mhdbl/format.hpp"

namespace mhdbl {

struct GevreyParams {
  double rho = 0.5;
  double sigma = 1.5;
  int N = 4;            // max normal-derivative order in seminorm_X
  int i_max = 1;        // max time-derivative order in the composite norm
  int offset_uf = 7;
  int offset_aux = 6;
  bool weighted_uf = true;  // <z>^{l+j} on the u/f entries of the composite norm
  int extra_terms = 0;      // tangential orders evaluated past the automatic cutoff

  void validate() const {
    auto fail = [](const std::string& key, double v, const std::string& range) {
      std::ostringstream os;
      os << "gevrey." << key << " = " << v << " outside allowed range " << range;
      throw ConfigError(os.str());
    };
    if (!(rho > 0)) fail("rho", rho, "rho > 0");
    if (!(sigma > 1.0 && sigma <= 1.5)) fail("sigma", sigma, "1 < sigma <= 3/2");
    if (N < 0 || N > 8) fail("N", N, "0 <= N <= 8");
    if (i_max < 0 || i_max > 4) fail("i_max", i_max, "0 <= i_max <= 4");
    if (extra_terms < 0) fail("extra_terms", extra_terms, ">= 0");
  }
};

struct NormEntry {
  std::string family;
  int m = 0;
  int i = 0;
  int j = 0;
  double log_value = 0.0;
};

struct NormReport {
  std::vector<NormEntry> entries;
  std::map<std::string, double> family_log;  // log of each family supremum
  double log_value = -std::numeric_limits<double>::infinity();
  std::string dominant_family;
  int M_max = 0;
  int i_max = 0;
  std::string provenance;

  double value() const { return std::exp(log_value); }
};

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogTiny = -690.7755278982137;  // log(1e-300)

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

inline double safe_log(double v) { return v > 0 ? std::log(v) : kNegInf; }

// Per-mode weighted energies of a group of fields, summed over the group.
struct ModeTable {
  std::vector<double> log_s;
  std::vector<double> log_kx, log_ky, log_kx_odd, log_ky_odd;
  double log_total = kNegInf;
  double log_kmax = kNegInf;
  int dim = 2;
};

inline ModeTable mode_table(const std::vector<Field>& comps, double power) {
  ModeTable t;
  if (comps.empty()) return t;
  const Grid& g = comps.front().grid();
  t.dim = g.dim();
  const auto w = g.quad_weights();
  std::vector<double> lw(g.nz());
  for (int j = 0; j < g.nz(); ++j) lw[j] = w[j] * (power == 0.0 ? 1.0 : std::pow(g.japanese(j), 2.0 * power));
  for (std::size_t k = 0; k < g.nk(); ++k) {
    double s = 0.0;
    for (const auto& c : comps) {
      auto m = c.mode(k);
      for (int j = 0; j < g.nz(); ++j) s += lw[j] * std::norm(m[j]);
    }
    const double ls = safe_log(g.area() * s);
    t.log_s.push_back(ls);
    t.log_kx.push_back(safe_log(std::abs(g.kx()[k])));
    t.log_ky.push_back(safe_log(std::abs(g.ky()[k])));
    t.log_kx_odd.push_back(safe_log(std::abs(g.kx_odd()[k])));
    t.log_ky_odd.push_back(safe_log(std::abs(g.ky_odd()[k])));
    t.log_total = log_add(t.log_total, ls);
    if (ls != kNegInf) t.log_kmax = std::max({t.log_kmax, t.log_kx.back(), t.log_ky.back()});
  }
  return t;
}

// log ||d_x^ax d_y^ay A|| with the same Nyquist convention as tangential_derivative.
inline double log_norm(const ModeTable& t, int ax, int ay) {
  double acc = kNegInf;
  double hi = kNegInf;
  std::vector<double> terms;
  terms.reserve(t.log_s.size());
  for (std::size_t k = 0; k < t.log_s.size(); ++k) {
    double v = t.log_s[k];
    if (v == kNegInf) continue;
    if (ax > 0) v += 2.0 * ax * (ax % 2 ? t.log_kx_odd[k] : t.log_kx[k]);
    if (ay > 0) v += 2.0 * ay * (ay % 2 ? t.log_ky_odd[k] : t.log_ky[k]);
    if (v == kNegInf) continue;
    terms.push_back(v);
    hi = std::max(hi, v);
  }
  if (hi == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : terms) sum += std::exp(v - hi);
  acc = hi + std::log(sum);
  return 0.5 * acc;
}

// max over |alpha| = m of log sum_p ||d^alpha A_p||.
inline double log_norm_sum_sup(const std::vector<ModeTable>& parts, int m) {
  if (parts.empty()) return kNegInf;
  const int dim = parts.front().dim;
  double best = kNegInf;
  for (int ay = 0; ay <= (dim == 3 ? m : 0); ++ay) {
    double s = kNegInf;
    for (const auto& p : parts) s = log_add(s, log_norm(p, m - ay, ay));
    best = std::max(best, s);
  }
  return best;
}

// One supremum stream: fixed (i, j), tangential order m = 0, 1, 2, ...
// with total order n = m + i + j. Terms with n >= offset carry
// rho^{n-offset} / ((n-offset)!)^sigma * m^mpower; terms with n <= low_limit
// are plain norms.
struct Stream {
  std::string family_high;
  std::string family_low;
  std::vector<ModeTable> parts;
  int i = 0;
  int j = 0;
  int offset = 7;
  int low_limit = 6;
  double mpower = 0.0;
};

inline double high_weight(const GevreyParams& p, int n, int offset, int m, double mpower) {
  const int r = n - offset;
  double v = r * std::log(p.rho) - p.sigma * std::lgamma(r + 1.0);
  if (mpower != 0.0) v += m > 0 ? mpower * std::log(static_cast<double>(m)) : kNegInf;
  return v;
}

// Upper bound of the high term at order m: |k^alpha| <= kmax^m.
inline double high_bound(const GevreyParams& p, const Stream& s, int m) {
  double lt = kNegInf;
  for (const auto& part : s.parts) lt = log_add(lt, 0.5 * part.log_total);
  double kmax = kNegInf;
  for (const auto& part : s.parts) kmax = std::max(kmax, part.log_kmax);
  const double km = m == 0 ? 0.0 : (kmax == kNegInf ? kNegInf : m * kmax);
  return high_weight(p, m + s.i + s.j, s.offset, m, s.mpower) + km + lt;
}

// Evaluates a stream. The tail past the cutoff is bounded by kmax^m times the
// total energy, which decays faster than any geometric rate once the
// factorial dominates; evaluation stops when that bound is 1e-300 below the
// running supremum and decreasing.
inline int run_stream(const Stream& s, const GevreyParams& p, NormReport& rep) {
  const bool has_high = !s.family_high.empty();
  double best = kNegInf;
  int extra = -1;
  int m = 0;
  constexpr int kMaxOrder = 4096;
  for (; m <= kMaxOrder; ++m) {
    const int n = m + s.i + s.j;
    const bool low = !s.family_low.empty() && n <= s.low_limit;
    const bool high = has_high && n >= s.offset;
    if (!low && !high) {
      if (has_high) continue;
      break;
    }
    const double ln = log_norm_sum_sup(s.parts, m);
    if (low) {
      rep.entries.push_back({s.family_low, m, s.i, s.j, ln});
      auto& f = rep.family_log.try_emplace(s.family_low, kNegInf).first->second;
      f = std::max(f, ln);
    }
    if (high) {
      const double v = ln == kNegInf ? kNegInf : high_weight(p, n, s.offset, m, s.mpower) + ln;
      rep.entries.push_back({s.family_high, m, s.i, s.j, v});
      auto& f = rep.family_log.try_emplace(s.family_high, kNegInf).first->second;
      f = std::max(f, v);
      best = std::max(best, v);
      if (extra < 0) {
        const double b = high_bound(p, s, m);
        const bool past_peak = high_bound(p, s, m + 1) <= b;
        if (past_peak && (b == kNegInf || (best != kNegInf && b < best + kLogTiny) || b < kLogTiny)) extra = 0;
      } else {
        ++extra;
      }
      if (extra >= 0 && extra >= p.extra_terms) break;
    }
  }
  if (m > kMaxOrder) throw NumericError("Gevrey series did not reach its cutoff", "gevrey: M_max <= 4096", 0.0);
  rep.M_max = std::max(rep.M_max, m);
  return m;
}

inline void finish(NormReport& rep) {
  rep.log_value = kNegInf;
  double top = kNegInf;
  for (const auto& [name, v] : rep.family_log) {
    rep.log_value = log_add(rep.log_value, v);
    if (v > top || rep.dominant_family.empty()) {
      top = std::max(top, v);
      rep.dominant_family = name;
    }
  }
}

inline std::vector<Field> ddz_each(const std::vector<Field>& comps, int j) {
  std::vector<Field> out;
  for (const auto& c : comps) out.push_back(ddz_n(c, j));
  return out;
}

}  // namespace detail

// ||A||_{rho,sigma,N}: sup over 0 <= j <= N and |alpha| + j >= 7 of
// rho^{|alpha|+j-7} / ((|alpha|+j-7)!)^sigma ||<z>^{l+j} d^alpha d_z^j A||
// plus the sup of the same norms over |alpha| + j <= 6. A tuple of fields is
// measured with the l^2 sum over its components.
inline NormReport seminorm_X(const std::vector<Field>& fields, const GevreyParams& params) {
  params.validate();
  if (fields.empty()) throw UsageError("seminorm_X needs at least one field");
  const Grid& g = fields.front().grid();
  if (g.nz() < 4 * (params.N + 1))
    throw UsageError("seminorm_X: N = " + std::to_string(params.N) + " normal derivatives need Nz >= " +
                     std::to_string(4 * (params.N + 1)));
  NormReport rep;
  rep.provenance = "offset 7; weight <z>^{l+j}; low orders |alpha|+j <= 6";
  for (int j = 0; j <= params.N; ++j) {
    detail::Stream s;
    s.family_high = "X";
    s.family_low = "X_low";
    s.parts.push_back(detail::mode_table(detail::ddz_each(fields, j), g.config().ell + j));
    s.j = j;
    s.offset = 7;
    s.low_limit = 6;
    detail::run_stream(s, params, rep);
  }
  detail::finish(rep);
  return rep;
}

// Fields entering the composite norm at one time-derivative order.
struct FamilySet {
  std::vector<Field> u, f, U, lambda, delta, xi, eta;
};

inline FamilySet family_fields(const State& s, const AuxState& aux) {
  FamilySet fs;
  fs.u = s.u_h;
  fs.f = s.f_h;
  fs.U = aux.U;
  fs.lambda = aux.lambda;
  fs.delta = aux.delta;
  const NonlinearFields nl = nonlinear_xi_eta(s);
  fs.xi = nl.xi;
  fs.eta = nl.eta;
  return fs;
}

// d_t of every family member by substituting the equations.
inline FamilySet family_time_derivative(const State& s, const AuxState& aux, bool transport = true) {
  const std::size_t nh = s.u_h.size();
  const StateTendency dt = rhs_regularized(s, s.grid().config().eps, transport);
  const std::vector<Field> dV = aux_time_derivative(s, aux);
  FamilySet fs;
  fs.u = dt.du;
  fs.f = dt.df;
  for (const auto& v : dV) fs.U.push_back(ddz(v));
  auto corrected = [&](const std::vector<Field>& b, const std::vector<Field>& db) {
    std::vector<Field> out;
    for (std::size_t c = 0; c < nh; ++c) {
      const Field dz = ddz(b[c]), ddz_t = ddz(db[c]);
      for (std::size_t a = 0; a < nh; ++a) {
        Field v = tangential_derivative(db[c], static_cast<int>(a));
        v -= multiply(ddz_t, aux.V[a]);
        v -= multiply(dz, dV[a]);
        out.push_back(std::move(v));
      }
    }
    return out;
  };
  fs.lambda = corrected(s.u_h, dt.du);
  if (s.magnetic()) {
    fs.delta = corrected(s.f_h, dt.df);
    const Field dh = reconstruct_normal(dt.df);
    for (std::size_t a = 0; a < nh; ++a) {
      fs.xi.push_back(convect(dt.df, dh, s.f_h[a]) + convect(s.f_h, s.h, dt.df[a]));
      fs.eta.push_back(convect(dt.df, dh, s.u_h[a]) + convect(s.f_h, s.h, dt.du[a]));
    }
  } else {
    for (std::size_t a = 0; a < nh; ++a) {
      fs.xi.emplace_back(s.grid_ptr());
      fs.eta.emplace_back(s.grid_ptr());
    }
  }
  return fs;
}

namespace detail {

inline std::vector<FamilySet> time_derivative_families(const Trajectory& traj, std::size_t t_index, int i_max) {
  std::vector<FamilySet> out;
  out.push_back(family_fields(traj.states[t_index], traj.aux[t_index]));
  if (i_max == 0) return out;
  if (i_max == 1) {
    out.push_back(family_time_derivative(traj.states[t_index], traj.aux[t_index], traj.solver.transport));
    return out;
  }
  if (traj.states.size() < 3) throw UsageError("time derivatives of order >= 2 need at least 3 checkpoints");
  std::vector<FamilySet> first;
  for (std::size_t n = 0; n < traj.states.size(); ++n)
    first.push_back(family_time_derivative(traj.states[n], traj.aux[n], traj.solver.transport));
  out.push_back(first[t_index]);
  const std::vector<double> times = traj.times();
  std::vector<FamilySet> cur = std::move(first);
  auto member_series = [](std::vector<FamilySet>& sets, auto member, const std::vector<double>& t) {
    const std::size_t count = (sets.front().*member).size();
    for (std::size_t c = 0; c < count; ++c) {
      std::vector<Field> series;
      for (auto& s : sets) series.push_back((s.*member)[c]);
      const auto d = time_derivative_series(t, series);
      for (std::size_t n = 0; n < sets.size(); ++n) (sets[n].*member)[c] = d[n];
    }
  };
  for (int i = 2; i <= i_max; ++i) {
    for (auto member : {&FamilySet::u, &FamilySet::f, &FamilySet::U, &FamilySet::lambda, &FamilySet::delta, &FamilySet::xi,
                        &FamilySet::eta})
      member_series(cur, member, times);
    out.push_back(cur[t_index]);
  }
  return out;
}

}  // namespace detail

// The composite norm |a|_{rho,sigma} of (u, f, U, lambda, delta, xi, eta) at
// checkpoint t_index: the sum of the seven family suprema
//   uf      rho^{n-7}/((n-7)!)^sigma (||d_t^i d^m d_z^j u|| + ||.. f||),  n = m+i+j >= 7, i+j <= 4
//   U       rho^{n-6}/((n-6)!)^sigma ||d_t^i d^m U||,                    n = m+i >= 6
//   lambda_delta  same weight times m^{1/2} (||lambda|| + ||delta||)
//   xi_eta        same weight times m (||<z>^l xi|| + ||<z>^l eta||)
//   uf_low, U_low, aux_low  the plain norms below the offsets.
// u/f norms carry <z>^{l+j} unless weighted_uf is false. d_t is obtained by
// substitution for i = 1 and by checkpoint differences of the substituted
// first derivatives for i >= 2.
inline NormReport composite_norm_a(const Trajectory& traj, const GevreyParams& params, std::size_t t_index) {
  params.validate();
  if (!traj.has_aux()) throw UsageError("composite_norm_a: trajectory carries no auxiliary fields");
  if (t_index >= traj.states.size()) throw UsageError("composite_norm_a: checkpoint index out of range");
  const auto families = detail::time_derivative_families(traj, t_index, params.i_max);
  const double ell = traj.domain.ell;
  NormReport rep;
  rep.i_max = params.i_max;
  {
    std::ostringstream os;
    os << "offsets uf " << params.offset_uf << ", aux " << params.offset_aux << "; uf weight "
       << (params.weighted_uf ? "<z>^{l+j}" : "none") << "; xi/eta weight <z>^l and factor m; lambda/delta factor m^{1/2}";
    rep.provenance = os.str();
  }
  for (int i = 0; i <= params.i_max; ++i) {
    const FamilySet& fs = families[i];
    for (int j = 0; j + i <= 4; ++j) {
      detail::Stream s;
      s.family_high = "uf";
      s.family_low = "uf_low";
      const double p = params.weighted_uf ? ell + j : 0.0;
      s.parts.push_back(detail::mode_table(detail::ddz_each(fs.u, j), p));
      if (!fs.f.empty()) s.parts.push_back(detail::mode_table(detail::ddz_each(fs.f, j), p));
      s.i = i;
      s.j = j;
      s.offset = params.offset_uf;
      s.low_limit = params.offset_uf - 1;
      detail::run_stream(s, params, rep);
    }
    detail::Stream su;
    su.family_high = "U";
    su.family_low = "U_low";
    su.parts.push_back(detail::mode_table(fs.U, 0.0));
    su.i = i;
    su.offset = params.offset_aux;
    su.low_limit = params.offset_aux - 1;
    detail::run_stream(su, params, rep);

    detail::Stream sl;
    sl.family_high = "lambda_delta";
    sl.parts.push_back(detail::mode_table(fs.lambda, 0.0));
    if (!fs.delta.empty()) sl.parts.push_back(detail::mode_table(fs.delta, 0.0));
    sl.i = i;
    sl.offset = params.offset_aux;
    sl.low_limit = -1;
    sl.mpower = 0.5;
    detail::run_stream(sl, params, rep);

    detail::Stream sx;
    sx.family_high = "xi_eta";
    sx.parts.push_back(detail::mode_table(fs.xi, ell));
    sx.parts.push_back(detail::mode_table(fs.eta, ell));
    sx.i = i;
    sx.offset = params.offset_aux;
    sx.low_limit = -1;
    sx.mpower = 1.0;
    detail::run_stream(sx, params, rep);

    detail::Stream sa;
    sa.family_low = "aux_low";
    sa.parts = {detail::mode_table(fs.lambda, 0.0), detail::mode_table(fs.xi, ell), detail::mode_table(fs.eta, ell)};
    if (!fs.delta.empty()) sa.parts.push_back(detail::mode_table(fs.delta, 0.0));
    sa.i = i;
    sa.low_limit = params.offset_aux - 1;
    detail::run_stream(sa, params, rep);
  }
  detail::finish(rep);
  return rep;
}

// CSV: family,m,i,j,log_value then composite,<M_max>,<i_max>,-1,<log>.
inline void write_norm_csv(std::ostream& os, const NormReport& rep) {
  os << "family,m,i,j,log_value\n";
  for (const auto& e : rep.entries)
    os << e.family << ',' << e.m << ',' << e.i << ',' << e.j << ',' << format_double(e.log_value) << '\n';
  os << "composite," << rep.M_max << ',' << rep.i_max << ",-1," << format_double(rep.log_value) << '\n';
}

// ---------------------------------------------------------------------------
// Radius of analyticity

struct RadiusEstimate {
  double rho = 0.0;
  double intercept = 0.0;
  bool poor_fit = false;
  double max_residual = 0.0;
  double data_range = 0.0;
  int m_first = 0;
  int m_last = 0;
  int active_modes = 0;
};

// Least-squares fit of log a_m - sigma log((m-offset)!) = c + (m-offset) log(1/rho)
// for m = m_first, m_first+1, ... The fit is flagged poor when the largest
// residual exceeds 10% of the range of the fitted data.
inline RadiusEstimate fit_gevrey_radius(const std::vector<double>& log_a, int m_first, double sigma, int offset = 7) {
  if (log_a.size() < 3) throw UsageError("radius fit needs at least 3 orders");
  const std::size_t n = log_a.size();
  std::vector<double> x(n), y(n);
  for (std::size_t q = 0; q < n; ++q) {
    const int m = m_first + static_cast<int>(q);
    x[q] = m - offset;
    y[q] = log_a[q] - sigma * std::lgamma(m - offset + 1.0);
    if (!std::isfinite(y[q])) throw UsageError("radius fit: non-finite amplitude at order " + std::to_string(m));
  }
  double mx = 0, my = 0;
  for (std::size_t q = 0; q < n; ++q) {
    mx += x[q];
    my += y[q];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t q = 0; q < n; ++q) {
    sxx += (x[q] - mx) * (x[q] - mx);
    sxy += (x[q] - mx) * (y[q] - my);
  }
  const double slope = sxy / sxx;
  RadiusEstimate r;
  r.intercept = my - slope * mx;
  r.rho = std::exp(-slope);
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  r.data_range = *hi - *lo;
  for (std::size_t q = 0; q < n; ++q) r.max_residual = std::max(r.max_residual, std::abs(y[q] - (r.intercept + slope * x[q])));
  r.poor_fit = r.max_residual > 0.1 * r.data_range;
  r.m_first = m_first;
  r.m_last = m_first + static_cast<int>(n) - 1;
  return r;
}

// Radius estimate from the <z>^l-weighted amplitudes a_m = ||<z>^l d^m A||.
// Orders run from the offset while the dominant contribution to a_m comes
// from a mode below the largest active one; beyond that a_m only reflects the
// spectral cutoff.
inline RadiusEstimate estimate_radius(const Field& a, double sigma, int offset = 7) {
  const Grid& g = a.grid();
  const auto table = detail::mode_table({a}, g.config().ell);
  double top = detail::kNegInf;
  for (double v : table.log_s) top = std::max(top, v);
  if (top == detail::kNegInf) throw UsageError("estimate_radius: field is zero");
  const double floor = top + 2.0 * std::log(1e-13);
  std::vector<int> active_index;
  int k_active = 0;
  for (std::size_t k = 0; k < g.nk(); ++k) {
    if (table.log_s[k] <= floor) continue;
    const int mag = std::max(std::abs(g.mode_x()[k]), std::abs(g.mode_y()[k]));
    if (mag > 0 && std::find(active_index.begin(), active_index.end(), mag) == active_index.end()) active_index.push_back(mag);
    k_active = std::max(k_active, mag);
  }
  const int active = static_cast<int>(active_index.size());
  if (active < 8)
    throw UsageError("estimate_radius: only " + std::to_string(active) + " active modes above the 1e-13 noise floor (need 8)");
  std::vector<double> log_a;
  for (int m = offset;; ++m) {
    // dominant mode of |k|^{2m} S_k
    double best = detail::kNegInf;
    int arg = 0;
    for (std::size_t k = 0; k < g.nk(); ++k) {
      if (table.log_s[k] <= floor || table.log_kx[k] == detail::kNegInf) continue;
      const double v = table.log_s[k] + 2.0 * m * std::max(table.log_kx[k], table.log_ky[k]);
      if (v > best) {
        best = v;
        arg = std::max(std::abs(g.mode_x()[k]), std::abs(g.mode_y()[k]));
      }
    }
    if (arg >= k_active) break;
    log_a.push_back(detail::log_norm_sum_sup({table}, m));
  }
  if (log_a.size() < 3) throw UsageError("estimate_radius: fewer than 3 resolved orders past the offset");
  RadiusEstimate r = fit_gevrey_radius(log_a, offset, sigma, offset);
  r.active_modes = active;
  return r;
}

}  // namespace mhdbl
