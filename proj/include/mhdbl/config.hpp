#pragma once

// INI-style run configuration: sections [domain], [solver], [gevrey],
// [initial], [output]. Unknown keys, duplicates and malformed values are
// errors carrying line numbers; every default taken is logged.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mhdbl/errors.hpp"
#include "mhdbl/format.hpp"
#include "mhdbl/gevrey.hpp"
#include "mhdbl/solver.hpp"

namespace mhdbl {

// u0 = a sin(k x) p_u(z), f0 = r a cos(k x) p_f(z) with x scaled by 2 pi / Lx;
// in 3D the y-components use sin(k y) and cos(k y). Profiles: gaussian
// p_u = z e^{-z^2}, p_f = e^{-z^2}; exponential p_u = z e^{-z},
// p_f = (1 + z) e^{-z}. Seeded noise adds a few random smooth modes.
struct InitialRecipe {
  std::string family = "mode";  // mode | zero
  int mode = 1;
  double amplitude = 0.01;
  double field_ratio = 1.0;
  std::string profile = "gaussian";  // gaussian | exponential
  bool magnetic = true;
  double noise = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const InitialRecipe&) const = default;
};

inline const std::vector<std::string>& diagnostic_names() {
  static const std::vector<std::string> names = {"energy", "xi_eta", "h_equation", "u_equation", "psi_m", "apriori"};
  return names;
}

struct OutputConfig {
  std::string dir = "mhdl_out";
  std::vector<std::string> diagnostics = diagnostic_names();
  bool norms = true;

  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  DomainConfig domain;
  SolverConfig solver;
  GevreyParams gevrey;
  double beta = 0.2;  // radius decay rate for the a priori monitor
  InitialRecipe initial;
  OutputConfig output;

  bool operator==(const RunConfig& o) const {
    return domain == o.domain && solver == o.solver && gevrey.rho == o.gevrey.rho && gevrey.sigma == o.gevrey.sigma &&
           gevrey.N == o.gevrey.N && gevrey.i_max == o.gevrey.i_max && gevrey.offset_uf == o.gevrey.offset_uf &&
           gevrey.offset_aux == o.gevrey.offset_aux && gevrey.weighted_uf == o.gevrey.weighted_uf &&
           gevrey.extra_terms == o.gevrey.extra_terms && beta == o.beta && initial == o.initial && output == o.output;
  }
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

// Expands "all" and "none" and rejects unknown names.
inline std::vector<std::string> parse_selection(const std::string& text) {
  const auto items = split_list(text);
  if (items.size() == 1 && items[0] == "all") return diagnostic_names();
  if (items.empty() || (items.size() == 1 && items[0] == "none")) return {};
  std::vector<std::string> out;
  for (const auto& name : items) {
    bool known = false;
    for (const auto& n : diagnostic_names()) known = known || n == name;
    if (!known) {
      std::string allowed;
      for (const auto& n : diagnostic_names()) allowed += (allowed.empty() ? "" : ", ") + n;
      throw ConfigError("unknown diagnostic '" + name + "'; allowed: all, none, " + allowed);
    }
    out.push_back(name);
  }
  return out;
}

namespace detail {

struct KeySpec {
  std::string section, key;
  bool required = false;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

inline double parse_number(const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw ConfigError("cannot parse '" + v + "' as a number");
  return out;
}

inline long long parse_integer(const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw ConfigError("cannot parse '" + v + "' as an integer");
  return out;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("cannot parse '" + v + "' as a boolean (true/false)");
}

inline std::vector<KeySpec> key_table(RunConfig& c) {
  std::vector<KeySpec> t;
  auto num = [&](const char* sec, const char* key, double& ref, bool req = false) {
    t.push_back({sec, key, req, [&ref](const std::string& v) { ref = parse_number(v); }, [&ref] { return format_double(ref); }});
  };
  auto integer = [&](const char* sec, const char* key, int& ref, bool req = false) {
    t.push_back({sec, key, req, [&ref](const std::string& v) { ref = static_cast<int>(parse_integer(v)); },
                 [&ref] { return std::to_string(ref); }});
  };
  auto flag = [&](const char* sec, const char* key, bool& ref) {
    t.push_back({sec, key, false, [&ref](const std::string& v) { ref = parse_bool(v); }, [&ref] { return std::string(ref ? "true" : "false"); }});
  };
  auto text = [&](const char* sec, const char* key, std::string& ref) {
    t.push_back({sec, key, false, [&ref](const std::string& v) { ref = v; }, [&ref] { return ref; }});
  };
  DomainConfig& d = c.domain;
  integer("domain", "dim", d.dim);
  num("domain", "Lx", d.Lx);
  num("domain", "Ly", d.Ly);
  num("domain", "Zmax", d.Zmax);
  integer("domain", "Nx", d.Nx);
  integer("domain", "Ny", d.Ny);
  integer("domain", "Nz", d.Nz);
  num("domain", "stretch", d.stretch);
  num("domain", "ell", d.ell);
  num("domain", "nu", d.nu);
  num("domain", "mu", d.mu);
  num("domain", "eps", d.eps);
  SolverConfig& s = c.solver;
  num("solver", "dt", s.dt, true);
  num("solver", "T_final", s.T_final, true);
  num("solver", "cfl_safety", s.cfl_safety);
  flag("solver", "imex", s.imex);
  integer("solver", "checkpoint_every", s.checkpoint_every);
  flag("solver", "transport", s.transport);
  flag("solver", "track_aux", s.track_aux);
  GevreyParams& g = c.gevrey;
  num("gevrey", "rho", g.rho);
  num("gevrey", "sigma", g.sigma);
  integer("gevrey", "N", g.N);
  integer("gevrey", "i_max", g.i_max);
  integer("gevrey", "offset_uf", g.offset_uf);
  integer("gevrey", "offset_aux", g.offset_aux);
  flag("gevrey", "weighted_uf", g.weighted_uf);
  integer("gevrey", "extra_terms", g.extra_terms);
  num("gevrey", "beta", c.beta);
  InitialRecipe& r = c.initial;
  text("initial", "family", r.family);
  integer("initial", "mode", r.mode);
  num("initial", "amplitude", r.amplitude);
  num("initial", "field_ratio", r.field_ratio);
  text("initial", "profile", r.profile);
  flag("initial", "magnetic", r.magnetic);
  num("initial", "noise", r.noise);
  t.push_back({"initial", "seed", false, [&r](const std::string& v) {
                 const long long x = parse_integer(v);
                 if (x < 0) throw ConfigError("seed must be non-negative");
                 r.seed = static_cast<std::uint64_t>(x);
               },
               [&r] { return std::to_string(r.seed); }});
  OutputConfig& o = c.output;
  text("output", "dir", o.dir);
  t.push_back({"output", "diagnostics", false, [&o](const std::string& v) { o.diagnostics = parse_selection(v); },
               [&o] {
                 if (o.diagnostics.empty()) return std::string("none");
                 std::string out;
                 for (const auto& n : o.diagnostics) out += (out.empty() ? "" : ",") + n;
                 return out;
               }});
  flag("output", "norms", o.norms);
  return t;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline void validate_run_config(const RunConfig& c) {
  c.domain.validate();
  c.solver.validate();
  c.gevrey.validate();
  auto fail = [](const std::string& key, const std::string& value, const std::string& range) {
    throw ConfigError(key + " = " + value + " outside allowed range " + range);
  };
  if (!(c.beta >= 0)) fail("gevrey.beta", format_double(c.beta), ">= 0");
  if (!(c.gevrey.rho - c.beta * c.solver.T_final > 0))
    fail("gevrey.beta", format_double(c.beta), "rho - beta * T_final > 0");
  const InitialRecipe& r = c.initial;
  if (r.family != "mode" && r.family != "zero") fail("initial.family", r.family, "{mode, zero}");
  const int kmax = (c.domain.dim == 3 ? std::min(c.domain.Nx, c.domain.Ny) : c.domain.Nx) / 3;
  if (r.mode < 1 || r.mode > kmax) fail("initial.mode", std::to_string(r.mode), "[1, " + std::to_string(kmax) + "] (retained modes)");
  if (!(std::abs(r.amplitude) <= 10)) fail("initial.amplitude", format_double(r.amplitude), "[-10, 10]");
  if (!(r.field_ratio >= 0 && r.field_ratio <= 10)) fail("initial.field_ratio", format_double(r.field_ratio), "[0, 10]");
  if (r.profile != "gaussian" && r.profile != "exponential") fail("initial.profile", r.profile, "{gaussian, exponential}");
  if (!(r.noise >= 0 && r.noise <= 1)) fail("initial.noise", format_double(r.noise), "[0, 1]");
  if (c.output.dir.empty()) fail("output.dir", "''", "non-empty path");
}

// Parses and validates. Defaults taken are written to `log` one per line.
inline RunConfig parse_config(const std::string& text, std::ostream* log = nullptr) {
  RunConfig cfg;
  auto table = detail::key_table(cfg);
  std::map<std::string, int> seen;  // "section.key" -> line
  std::set<std::string> sections = {"domain", "solver", "gevrey", "initial", "output"};
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header '" + line + "'");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value', got '" + line + "'");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const std::string full = section + "." + key;
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& k) { return k.section == section && k.key == key; });
    if (it == table.end()) throw ConfigError(where + "unknown key '" + key + "' in section [" + section + "]");
    if (auto prev = seen.find(full); prev != seen.end())
      throw ConfigError("duplicate key " + full + " at lines " + std::to_string(prev->second) + " and " + std::to_string(line_no));
    seen[full] = line_no;
    if (value.empty()) throw ConfigError(where + full + ": empty value");
    try {
      it->set(value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + full + ": " + e.what());
    }
  }
  for (const auto& k : table) {
    const std::string full = k.section + "." + k.key;
    if (seen.count(full)) continue;
    if (k.required) throw ConfigError("missing required key " + full);
    if (log) *log << "default " << full << " = " << k.get() << '\n';
  }
  validate_run_config(cfg);
  return cfg;
}

// Canonical text of a configuration; parse_config(to_ini(c)) == c.
inline std::string to_ini(const RunConfig& c) {
  RunConfig copy = c;
  auto table = detail::key_table(copy);
  std::ostringstream os;
  std::string section;
  for (const auto& k : table) {
    if (k.section != section) {
      if (!section.empty()) os << '\n';
      section = k.section;
      os << '[' << section << "]\n";
    }
    os << k.key << " = " << k.get() << '\n';
  }
  return os.str();
}

inline State build_initial_state(const GridPtr& grid, const InitialRecipe& r) {
  State s = State::zeros(grid, r.magnetic);
  if (r.family == "zero") return prepare_initial_state(std::move(s));
  const bool gaussian = r.profile == "gaussian";
  auto pu = [gaussian](double z) { return gaussian ? z * std::exp(-z * z) : z * std::exp(-z); };
  auto pf = [gaussian](double z) { return gaussian ? std::exp(-z * z) : (1.0 + z) * std::exp(-z); };
  const double kx = 2.0 * std::numbers::pi / grid->config().Lx, ky = 2.0 * std::numbers::pi / grid->config().Ly;
  const double k = r.mode, a = r.amplitude, b = r.field_ratio * r.amplitude;
  s.u_h[0] = sample(grid, [&](double x, double, double z) { return a * std::sin(k * kx * x) * pu(z); });
  if (grid->dim() == 3) s.u_h[1] = sample(grid, [&](double, double y, double z) { return a * std::sin(k * ky * y) * pu(z); });
  if (r.magnetic) {
    s.f_h[0] = sample(grid, [&](double x, double, double z) { return b * std::cos(k * kx * x) * pf(z); });
    if (grid->dim() == 3) s.f_h[1] = sample(grid, [&](double, double y, double z) { return b * std::cos(k * ky * y) * pf(z); });
  }
  if (r.noise > 0) {
    std::mt19937_64 rng(r.seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), rate(0.5, 2.0), phase(0.0, 2.0 * std::numbers::pi);
    const int kmax = std::max(1, grid->config().Nx / 6);
    std::uniform_int_distribution<int> mode(0, kmax);
    auto perturb = [&](Field& target, bool wall_zero) {
      for (int n = 0; n < 3; ++n) {
        const int mx = mode(rng), my = grid->dim() == 3 ? mode(rng) : 0;
        const double c = r.noise * amp(rng), q = rate(rng), ph = phase(rng);
        target += sample(grid, [&](double x, double y, double z) {
          const double prof = wall_zero ? z * std::exp(-q * z) : std::exp(-q * z * z);
          return c * std::cos(mx * kx * x + my * ky * y + ph) * prof;
        });
      }
    };
    for (auto& u : s.u_h) perturb(u, true);
    for (auto& f : s.f_h) perturb(f, false);
  }
  return prepare_initial_state(std::move(s));
}

}  // namespace mhdbl
