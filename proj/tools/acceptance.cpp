#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "mhdbl/aux_residuals.hpp"
#include "mhdbl/cli.hpp"
#include "mhdbl/diagnostics.hpp"
#include "mhdbl/fixtures.hpp"
#include "mhdbl/gevrey.hpp"

using namespace mhdbl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string s = "{";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "}";
}

std::vector<double> ratios(const std::vector<double>& v) {
  std::vector<double> r;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) r.push_back(v[i] / v[i + 1]);
  return r;
}

double min_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end()); }

DomainConfig plain_domain(int nx, int nz, double zmax, double stretch) {
  DomainConfig d;
  d.dim = 2;
  d.Lx = 2.0 * std::numbers::pi;
  d.Nx = nx;
  d.Nz = nz;
  d.Zmax = zmax;
  d.stretch = stretch;
  return d;
}

Field random_field(std::mt19937_64& rng, const GridPtr& g, int max_mode, bool wall_zero) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0), rate(0.5, 2.0), phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_int_distribution<int> mode(0, max_mode);
  struct Term {
    int m;
    double a, r, ph;
  };
  std::vector<Term> terms;
  for (int i = 0; i < 4; ++i) terms.push_back({mode(rng), amp(rng), rate(rng), phase(rng)});
  return sample(g, [&](double x, double, double z) {
    double v = 0.0;
    for (const auto& t : terms) v += t.a * std::cos(t.m * x + t.ph) * (wall_zero ? z * std::exp(-t.r * z) : std::exp(-t.r * z * z));
    return v;
  });
}

const std::vector<Trajectory>& residual_ladder() {
  static const std::vector<Trajectory> ladder = [] {
    std::vector<Trajectory> out;
    for (int r = 0; r < 4; ++r) out.push_back(fixtures::run_residual_rung(r));
    return out;
  }();
  return ladder;
}

// neg[k+1] >= neg[k] - clean[k] on every rung and the finest rung an order of magnitude above clean
bool stalls(const std::vector<double>& neg, const std::vector<double>& clean) {
  for (std::size_t i = 0; i + 1 < neg.size(); ++i)
    if (neg[i + 1] < neg[i] - clean[i]) return false;
  return neg.back() > 10.0 * clean.back();
}

using Term = double XiEtaCoefficients::*;

std::pair<std::vector<double>, std::vector<double>> xi_eta_maxima(const std::vector<Trajectory>& ladder, const XiEtaCoefficients& c) {
  std::vector<double> eta, xi;
  for (const auto& tr : ladder) {
    const auto [e, x] = xi_eta_equation_residual(tr, c);
    eta.push_back(e.max_residual());
    xi.push_back(x.max_residual());
  }
  return {eta, xi};
}

void mms(Outcome& o) {
  const MmsReport r = manufactured_forcing_residual(decaying_mode_solution(), fixtures::standard_mms_ladder());
  double seconds = 0.0;
  for (const auto* t : {&r.normal, &r.temporal, &r.tangential})
    for (const auto& rung : t->rungs) seconds += rung.seconds;
  const double pz = r.normal.observed_order(), pt = r.temporal.observed_order();
  o.detail << "order dz " << fmt(pz) << " (>= 1.9), order dt " << fmt(pt) << " (>= 0.9), " << r.normal.rungs.size()
           << " normal rungs, " << fmt(seconds) << " s (< 120)";
  o.require(r.normal.rungs.size() >= 4 && r.temporal.rungs.size() >= 4, "4-rung ladders");
  o.require(pz >= 1.9, "normal order");
  o.require(pt >= 0.9, "temporal order");
  o.require(seconds < 120.0, "runtime");
}

void xi_eta(Outcome& o) {
  const auto& ladder = residual_ladder();
  const auto [eta, xi] = xi_eta_maxima(ladder, {});
  bool within = true;
  for (const auto& tr : ladder) {
    const auto [e, x] = xi_eta_equation_residual(tr);
    within = within && e.pass && x.pass;
  }
  o.detail << "eta ratios " << list(ratios(eta)) << ", xi ratios " << list(ratios(xi));
  o.require(min_of(ratios(eta)) >= 1.8 && min_of(ratios(xi)) >= 1.8, "ratio >= 1.8");
  o.require(within, "per-rung tolerance");

  int controls = 0;
  for (const auto& [term, label] : std::vector<std::pair<Term, const char*>>{
           {&XiEtaCoefficients::time, "time"}, {&XiEtaCoefficients::diffusion, "diffusion"}, {&XiEtaCoefficients::shear, "shear"}}) {
    XiEtaCoefficients c;
    c.*term = 1.1;
    const auto [ne, nx] = xi_eta_maxima(ladder, c);
    o.require(stalls(ne, eta) && stalls(nx, xi), std::string(label) + " control");
    ++controls;
  }
  XiEtaCoefficients mixed;
  mixed.mixed = -1.0;
  o.require(stalls(xi_eta_maxima(ladder, mixed).first, eta), "mixed control");
  ++controls;

  std::vector<Trajectory> big;
  for (int r = 0; r < 3; ++r) big.push_back(fixtures::run_residual_rung(r, 0.2, 0.5));
  const auto big_clean = xi_eta_maxima(big, {}).second;
  for (const auto& [term, label] :
       std::vector<std::pair<Term, const char*>>{{&XiEtaCoefficients::transport, "transport"}, {&XiEtaCoefficients::coupling, "coupling"}}) {
    XiEtaCoefficients c;
    c.*term = -1.0;
    o.require(stalls(xi_eta_maxima(big, c).second, big_clean), std::string(label) + " control");
    ++controls;
  }
  o.detail << ", " << controls << " negative controls";
}

void cancellation(Outcome& o) {
  std::mt19937_64 rng(17);
  auto g = make_grid(plain_domain(32, 65, 20.0, 4.0));
  auto magnetic = [&](const GridPtr& grid, const std::function<double(double, double)>& f) {
    State s = State::zeros(grid);
    s.f_h[0] = sample(grid, [&](double x, double, double z) { return f(x, z); });
    s = apply_boundary_conditions(s);
    refresh_normal(s);
    return s;
  };
  const State uniform = magnetic(g, [](double, double z) { return (1.0 + z) * std::exp(-z * z); });
  const State zero_f = magnetic(g, [](double, double) { return 0.0; });
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Field phi = random_field(rng, g, 6, true);
    const int j = trial % 4;
    const double scale = inner_product_weighted(phi, phi, j);
    worst = std::max(worst, std::abs(cancellation_inner_product(uniform, phi, j)) / scale);
    worst = std::max(worst, std::abs(cancellation_inner_product(zero_f, phi, j)) / scale);
  }
  std::vector<double> v;
  for (int nz : {65, 129, 257, 513}) {
    auto gz = make_grid(plain_domain(32, nz, 30.0, 4.0));
    const State s = magnetic(gz, [](double x, double z) {
      return std::cos(x) * std::exp(-z * z) + 0.5 * std::sin(2 * x) * std::exp(-z) * (1.0 + z);
    });
    const Field phi = sample(gz, [](double x, double, double z) { return std::sin(x) * z * std::exp(-z); });
    v.push_back(std::abs(cancellation_inner_product(s, phi, 0)));
  }
  std::vector<double> orders;
  for (double r : ratios(v)) orders.push_back(std::log2(r));
  o.detail << "exact paths max |value|/|phi|^2 " << fmt(worst) << " (<= 1e-10), generic orders " << list(orders);
  o.require(worst <= 1e-10, "exact paths");
  o.require(min_of(orders) >= 1.8, "second-order decay");
}

void energy(Outcome& o) {
  std::vector<double> r;
  bool within = true;
  for (const auto& tr : residual_ladder()) {
    const DiagnosticReport rep = energy_balance_report(tr);
    within = within && rep.pass;
    r.push_back(rep.max_residual());
  }
  std::vector<double> orders;
  for (double q : ratios(r)) orders.push_back(std::log2(q));
  auto zero_f_run = [](bool magnetic) {
    auto g = make_grid(fixtures::small_data_domain(16, 65));
    State s = fixtures::small_data_state(g, 0.1, magnetic);
    if (magnetic) {
      s.f_h[0] = Field(g);
      s = apply_boundary_conditions(s);
      refresh_normal(s);
    }
    SolverConfig c;
    c.dt = 2e-3;
    c.T_final = 0.05;
    c.checkpoint_every = 2;
    return energy_budget(run_trajectory(s, c));
  };
  const EnergyBudget a = zero_f_run(true), b = zero_f_run(false);
  const bool bitwise = a.energy == b.energy && a.dissipation == b.dissipation && a.defect == b.defect;
  o.detail << "defects " << list(r) << ", orders " << list(orders) << ", f=0 vs Prandtl " << (bitwise ? "identical" : "differ");
  o.require(within, "ladder prediction");
  o.require(min_of(orders) >= 1.8, "order >= 1.8");
  o.require(bitwise, "bit-for-bit");
}

void auxiliary(Outcome& o) {
  const auto& ladder = residual_ladder();
  bool exact = true;
  for (const auto& tr : ladder) {
    const State& s = tr.states.front();
    const AuxState& aux = tr.aux.front();
    exact = exact && aux.lambda[0] == ddx(s.u_h[0]) && aux.delta[0] == ddx(s.f_h[0]);
  }
  o.require(exact, "t=0 identities");
  std::vector<double> u;
  for (const auto& tr : ladder) u.push_back(centered_max(u_equation_residual(tr)));
  o.detail << "lambda/delta at t=0 " << (exact ? "exact" : "inexact") << ", U ratios " << list(ratios(u));
  o.require(min_of(ratios(u)) >= 1.8, "U order");
  for (int m = 1; m <= 3; ++m) {
    std::vector<double> r;
    for (const auto& tr : ladder) r.push_back(centered_max(psi_m_residual(tr, m)));
    o.detail << ", psi_" << m << " min ratio " << fmt(min_of(ratios(r)));
    o.require(min_of(ratios(r)) >= 1.8, "psi_" + std::to_string(m) + " order");
  }
}

void gevrey(Outcome& o) {
  auto g = make_grid(plain_domain(32, 64, 30.0, 4.0));
  auto prof = [](double z) { return std::exp(-z); };
  const auto w = g->quad_weights();
  double c = 0.0;
  for (int j = 0; j < g->nz(); ++j) {
    const double v = std::pow(g->japanese(j), g->config().ell) * prof(g->z()[j]);
    c += w[j] * v * v;
  }
  c = std::sqrt(c * g->config().Lx / 2.0);
  double worst = 0.0;
  for (int k : {1, 3, 7}) {
    for (double rho : {0.1, 0.5, 2.0}) {
      double high = 0.0, low = 0.0, fact = 1.0;
      for (int m = 7; m < 207; ++m) {
        if (m > 7) fact *= m - 7;
        high = std::max(high, std::pow(rho, m - 7) * std::pow(double(k), m) / std::pow(fact, 1.5) * c);
      }
      for (int m = 0; m <= 6; ++m) low = std::max(low, std::pow(double(k), m) * c);
      GevreyParams p;
      p.rho = rho;
      p.sigma = 1.5;
      p.N = 0;
      const Field a = sample(g, [&](double x, double, double z) { return std::cos(k * x) * prof(z); });
      worst = std::max(worst, std::abs(seminorm_X({a}, p).value() / (high + low) - 1.0));
    }
  }
  o.require(worst <= 1e-10, "single-mode oracle");

  std::mt19937_64 rng(2024);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto gm = make_grid(plain_domain(32, 32, 10.0, 3.0));
  int monotone = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Field a = random_field(rng, gm, 8, false);
    GevreyParams p;
    p.N = 2;
    p.rho = uni(0.05, 2.0);
    GevreyParams wider = p, steeper = p;
    wider.rho = p.rho * uni(1.0, 3.0);
    p.sigma = wider.sigma = steeper.sigma = uni(1.01, 1.5);
    steeper.sigma = uni(p.sigma, 1.5);
    const double base = seminorm_X({a}, p).log_value;
    if (base <= seminorm_X({a}, wider).log_value + 1e-12 && base + 1e-12 >= seminorm_X({a}, steeper).log_value) ++monotone;
  }
  o.require(monotone == 100, "monotonicity");

  double radius_err = 0.0;
  for (double rho0 : {0.2, 0.5, 1.3}) {
    for (double sigma : {1.1, 1.5}) {
      std::vector<double> log_a;
      for (int m = 7; m < 40; ++m) log_a.push_back(-(m - 7) * std::log(rho0) + sigma * std::lgamma(m - 6.0) + 0.3);
      radius_err = std::max(radius_err, std::abs(fit_gevrey_radius(log_a, 7, sigma).rho / rho0 - 1.0));
    }
  }
  o.require(radius_err <= 1e-6, "exact radius");

  int good = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 r(seed);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<double> log_a;
    for (int m = 7; m < 40; ++m) log_a.push_back(-(m - 7) * std::log(0.5) + 1.5 * std::lgamma(m - 6.0) + std::log1p(noise(r)));
    if (std::abs(fit_gevrey_radius(log_a, 7, 1.5).rho / 0.5 - 1.0) <= 0.05) ++good;
  }
  o.require(good >= 95, "noisy recovery");
  o.detail << "oracle rel err " << fmt(worst) << ", monotone " << monotone << "/100, radius rel err " << fmt(radius_err)
           << ", noisy within 5% " << good << "/100";
}

void eps_continuation(Outcome& o) {
  auto run = [](double eps) {
    DomainConfig d = fixtures::small_data_domain(32, 65);
    d.eps = eps;
    auto g = make_grid(d);
    SolverConfig c;
    c.dt = 2.5e-3;
    c.T_final = 0.25;
    c.checkpoint_every = 1 << 20;
    c.track_aux = false;
    return run_trajectory(fixtures::small_data_state(g), c).states.back();
  };
  const State a = run(1e-2), b = run(1e-3), c = run(1e-4);
  auto dist = [](const State& x, const State& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.u_h.size(); ++i) s += std::pow(l2_norm(x.u_h[i] - y.u_h[i]), 2);
    for (std::size_t i = 0; i < x.f_h.size(); ++i) s += std::pow(l2_norm(x.f_h[i] - y.f_h[i]), 2);
    return std::sqrt(s);
  };
  const double d1 = dist(a, b), d2 = dist(b, c);
  o.detail << "d(1e-2,1e-3) " << fmt(d1) << ", d(1e-3,1e-4) " << fmt(d2);
  o.require(d1 > d2 && d2 > 0.0, "strictly decreasing");
}

void apriori(Outcome& o) {
  auto g = make_grid(fixtures::small_data_domain(32, 129));
  SolverConfig c;
  c.dt = 1e-3;
  c.T_final = 0.5;
  c.checkpoint_every = 50;
  const DiagnosticReport rep = apriori_monitor(run_trajectory(fixtures::small_data_state(g), c), 0.5, 1.5, 0.2);
  const double growth = rep.max_residual() / rep.residuals.front();
  o.detail << "max/initial " << fmt(growth) << " (<= 2) over " << rep.residuals.size() << " checkpoints to T=0.5";
  o.require(rep.pass && growth <= 2.0, "within 2x");
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  return files;
}

void determinism(Outcome& o) {
  RunConfig cfg = parse_config(read_file(fs::path(MHDBL_SOURCE_DIR) / "configs" / "regression.ini"));
  const fs::path dir = fs::temp_directory_path() / "mhdl_acceptance_run";
  cfg.output.dir = dir.string();
  std::ostringstream log;
  std::map<std::string, std::string> first;
  bool same = true;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(dir);
    if (cli::cmd_run(cfg, log) != 0) {
      o.require(false, "run");
      return;
    }
    if (pass == 0)
      first = snapshot(dir);
    else
      same = snapshot(dir) == first;
  }
  fs::remove_all(dir);
  o.require(same, "byte-identical runs");

  std::mt19937_64 rng(99);
  int round_trips = 0;
  for (int trial = 0; trial < 10; ++trial) {
    DomainConfig d = fixtures::small_data_domain(16, 33);
    d.nu = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    auto g = make_grid(d);
    State s = State::zeros(g);
    s.u_h[0] = random_field(rng, g, 3, true);
    s.f_h[0] = random_field(rng, g, 3, false);
    s = prepare_initial_state(s);
    s.t = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    s.u_h[0](0, 0) = cplx(-0.0, std::numeric_limits<double>::denorm_min());
    const Checkpoint c{d, s, trial % 2 ? std::optional<AuxState>(initial_aux(s)) : std::nullopt};
    const std::string bytes = serialize_checkpoint(c);
    if (serialize_checkpoint(deserialize_checkpoint(bytes)) == bytes && deserialize_checkpoint(bytes) == c) ++round_trips;
  }
  o.require(round_trips == 10, "bitwise round trip");
  o.detail << first.size() << " output files identical across runs: " << (same ? "yes" : "no") << ", bitwise checkpoint round trips "
           << round_trips << "/10";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"manufactured-solution convergence", mms},
      {"xi/eta derived-equation residuals", xi_eta},
      {"discrete symmetry cancellation", cancellation},
      {"energy identity", energy},
      {"auxiliary construction", auxiliary},
      {"gevrey engine", gevrey},
      {"epsilon continuation", eps_continuation},
      {"a priori monitor", apriori},
      {"determinism and round trip", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      check(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << " (" << fmt(secs) << " s)" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
