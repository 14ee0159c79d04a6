#pragma once

// Batch entry points behind the mhdl executable: run, diagnose, norms, mms.
// Exit codes: 0 ok, 2 configuration error, 3 numeric failure, 4 I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mhdbl/config.hpp"
#include "mhdbl/diagnostics.hpp"
#include "mhdbl/fixtures.hpp"
#include "mhdbl/io.hpp"

namespace mhdbl::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericFailure = 3, kIoError = 4 };

inline constexpr const char* kManifestName = "manifest.json";

inline std::string checkpoint_name(std::size_t i) {
  std::ostringstream os;
  os << "ckpt_" << std::setw(5) << std::setfill('0') << i << ".bin";
  return os.str();
}

inline bool needs_aux(const std::string& diagnostic) {
  return diagnostic == "u_equation" || diagnostic == "psi_m" || diagnostic == "apriori";
}

// Reports for the per-run aux residuals, which have no a priori tolerance:
// they pass when finite and are judged for convergence across ladders.
inline DiagnosticReport series_report(std::string name, const Trajectory& traj, std::vector<double> series) {
  DiagnosticReport rep{std::move(name), traj.times(), std::move(series), 0.0, false, {}, refinement_tag(traj)};
  rep.tolerance = std::numeric_limits<double>::infinity();
  rep.tolerance_note = "no per-run tolerance; convergence is judged across a refinement ladder";
  rep.pass = std::all_of(rep.residuals.begin(), rep.residuals.end(), [](double r) { return std::isfinite(r); });
  return rep;
}

inline std::vector<DiagnosticReport> run_diagnostics(const Trajectory& traj, const RunConfig& cfg,
                                                     const std::vector<std::string>& selection) {
  std::vector<DiagnosticReport> out;
  for (const auto& name : selection) {
    if (needs_aux(name) && !traj.has_aux())
      throw ConfigError("diagnostic " + name + " needs auxiliary fields (solver.track_aux = true)");
    if (name == "energy") {
      out.push_back(energy_balance_report(traj));
    } else if (name == "xi_eta") {
      auto [eta, xi] = xi_eta_equation_residual(traj);
      out.push_back(std::move(eta));
      out.push_back(std::move(xi));
    } else if (name == "h_equation") {
      out.push_back(h_equation_residual(traj));
    } else if (name == "u_equation") {
      out.push_back(series_report("u_equation", traj, u_equation_residual(traj)));
    } else if (name == "psi_m") {
      for (int m = 1; m <= 3; ++m) out.push_back(series_report("psi_" + std::to_string(m), traj, psi_m_residual(traj, m)));
    } else if (name == "apriori") {
      out.push_back(apriori_monitor(traj, cfg.gevrey.rho, cfg.gevrey.sigma, cfg.beta, cfg.gevrey));
    } else {
      throw ConfigError("unknown diagnostic '" + name + "'");
    }
  }
  return out;
}

inline std::string render(const std::function<void(std::ostream&)>& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

// time,rho,log_value,value,dominant_family per checkpoint, radius fixed.
inline std::string norm_series_csv(const Trajectory& traj, const GevreyParams& params) {
  std::ostringstream os;
  os << "time,rho,log_value,value,dominant_family\n";
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const NormReport rep = composite_norm_a(traj, params, i);
    os << format_double(traj.states[i].t) << ',' << format_double(params.rho) << ',' << format_double(rep.log_value) << ','
       << format_double(rep.value()) << ',' << rep.dominant_family << '\n';
  }
  return os.str();
}

inline void write_diagnostics(const fs::path& dir, const std::vector<DiagnosticReport>& reports,
                              std::vector<std::pair<std::string, std::string>>& files) {
  for (const auto& r : reports) files.emplace_back("diag_" + r.name + ".csv", render([&](std::ostream& os) { write_report_csv(os, r); }));
  files.emplace_back("summary.csv", render([&](std::ostream& os) { write_summary_csv(os, reports); }));
  for (const auto& [name, data] : files) write_file(dir / name, data);
}

inline json manifest_entries(const std::vector<std::pair<std::string, std::string>>& files) {
  std::vector<std::pair<std::string, std::string>> sorted = files;
  std::sort(sorted.begin(), sorted.end());
  json list = json::array();
  for (const auto& [name, data] : sorted)
    list.push_back({{"path", name}, {"sha1", git_blob_hash(data)}, {"bytes", data.size()}});
  return list;
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

inline void write_failure(const fs::path& dir, const std::string& kind, const std::string& message, const std::string& constraint,
                          double last_valid_time) {
  json rec = {{"status", kind}, {"message", message}, {"constraint", constraint}, {"last_valid_time", last_valid_time}};
  write_file(dir / "failure.json", rec.dump(2) + "\n");
}

// Runs the configured trajectory and writes checkpoints, norms, diagnostics
// and the manifest into cfg.output.dir.
inline int cmd_run(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = cfg.output.dir;
  ensure_dir(dir);
  for (const auto& name : cfg.output.diagnostics)
    if (needs_aux(name) && !cfg.solver.track_aux)
      throw ConfigError("output.diagnostics: " + name + " needs solver.track_aux = true");
  if (cfg.output.norms && !cfg.solver.track_aux) throw ConfigError("output.norms = true needs solver.track_aux = true");

  auto grid = make_grid(cfg.domain);
  const State initial = build_initial_state(grid, cfg.initial);
  Trajectory traj;
  try {
    traj = run_trajectory(initial, cfg.solver);
  } catch (const NumericError& e) {
    write_failure(dir, "numeric_failure", e.what(), e.constraint(), e.last_valid_time());
    log << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  }

  std::vector<std::pair<std::string, std::string>> files;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    Checkpoint c{cfg.domain, traj.states[i], std::nullopt};
    if (traj.has_aux()) c.aux = traj.aux[i];
    files.emplace_back(checkpoint_name(i), serialize_checkpoint(c));
  }
  files.emplace_back("config.ini", to_ini(cfg));
  if (traj.truncated) {
    for (const auto& [name, data] : files) write_file(dir / name, data);
    write_failure(dir, "numeric_failure", traj.truncation_reason, "nan", traj.last_valid_time);
    json manifest = {{"format", "mhdl-manifest"}, {"version", 1}, {"config", to_ini(cfg)}, {"files", manifest_entries(files)}};
    write_file(dir / kManifestName, manifest.dump(2) + "\n");
    log << "run truncated at t = " << format_double(traj.last_valid_time) << ": " << traj.truncation_reason << '\n';
    return kNumericFailure;
  }
  if (cfg.output.norms) {
    files.emplace_back("norms.csv", norm_series_csv(traj, cfg.gevrey));
    const NormReport last = composite_norm_a(traj, cfg.gevrey, traj.states.size() - 1);
    files.emplace_back("norms_final.csv", render([&](std::ostream& os) { write_norm_csv(os, last); }));
  }
  const auto reports = run_diagnostics(traj, cfg, cfg.output.diagnostics);
  write_diagnostics(dir, reports, files);
  json manifest = {{"format", "mhdl-manifest"}, {"version", 1}, {"config", to_ini(cfg)}, {"files", manifest_entries(files)}};
  write_file(dir / kManifestName, manifest.dump(2) + "\n");
  log << "wrote " << files.size() << " files to " << dir.string() << '\n';
  for (const auto& r : reports)
    log << "  " << r.name << ": max " << format_double(r.max_residual()) << (r.pass ? " pass" : " FAIL") << '\n';
  return kOk;
}

struct LoadedRun {
  RunConfig config;
  Trajectory trajectory;
};

// Reads the manifest, verifies every checkpoint hash and rebuilds the trajectory.
inline LoadedRun load_run(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / kManifestName));
  } catch (const json::exception& e) {
    throw IoError((dir / kManifestName).string() + ": malformed manifest: " + e.what());
  }
  LoadedRun run;
  std::ostringstream ignore;
  run.config = parse_config(manifest.at("config").get<std::string>(), &ignore);
  std::vector<std::string> ckpts;
  for (const auto& entry : manifest.at("files")) {
    const std::string name = entry.at("path").get<std::string>();
    if (name.rfind("ckpt_", 0) != 0) continue;
    const std::string expected = entry.at("sha1").get<std::string>();
    if (!fs::exists(dir / name)) throw IoError("missing checkpoint " + (dir / name).string() + " (expected hash " + expected + ")");
    const std::string actual = git_blob_hash(read_file(dir / name));
    if (actual != expected)
      throw IoError("corrupt checkpoint " + (dir / name).string() + ": expected hash " + expected + ", got " + actual);
    ckpts.push_back(name);
  }
  if (ckpts.empty()) throw IoError(dir.string() + ": manifest lists no checkpoints");
  Trajectory& tr = run.trajectory;
  tr.solver = run.config.solver;
  GridPtr grid;
  for (const auto& name : ckpts) {
    Checkpoint c = read_checkpoint(dir / name);
    if (!grid) {
      tr.domain = c.domain;
      grid = make_grid(c.domain);
    } else if (!(c.domain == tr.domain)) {
      throw IoError((dir / name).string() + ": domain differs from the first checkpoint");
    }
    tr.states.push_back(std::move(c.state));
    if (c.aux) tr.aux.push_back(std::move(*c.aux));
  }
  if (!tr.aux.empty() && tr.aux.size() != tr.states.size()) throw IoError(dir.string() + ": auxiliary fields missing in some checkpoints");
  tr.last_valid_time = tr.states.back().t;
  return run;
}

inline int cmd_diagnose(const fs::path& dir, const std::vector<std::string>& selection, std::ostream& log) {
  const LoadedRun run = load_run(dir);
  const fs::path out = dir / "diagnose";
  ensure_dir(out);
  std::vector<std::pair<std::string, std::string>> files;
  const auto reports = run_diagnostics(run.trajectory, run.config, selection);
  write_diagnostics(out, reports, files);
  for (const auto& r : reports)
    log << r.name << ": max " << format_double(r.max_residual()) << " tolerance " << format_double(r.tolerance)
        << (r.pass ? " pass" : " FAIL") << '\n';
  log << "wrote " << files.size() << " files to " << out.string() << '\n';
  return kOk;
}

inline int cmd_norms(const fs::path& dir, double rho, double sigma, std::optional<int> i_max, std::ostream& log) {
  const LoadedRun run = load_run(dir);
  GevreyParams p = run.config.gevrey;
  p.rho = rho;
  p.sigma = sigma;
  if (i_max) p.i_max = *i_max;
  p.validate();
  if (!run.trajectory.has_aux()) throw ConfigError("norms need checkpoints with auxiliary fields (solver.track_aux = true)");
  std::ostringstream name;
  name << "norms_rho" << format_double(rho) << "_sigma" << format_double(sigma) << "_imax" << p.i_max << ".csv";
  const std::string csv = norm_series_csv(run.trajectory, p);
  write_file(dir / name.str(), csv);
  log << csv;
  return kOk;
}

inline std::string mms_csv(const MmsReport& rep) {
  std::ostringstream os;
  os << "parameter,Nx,Nz,dt,error_u,error_f,diff_to_next,seconds\n";
  for (const ConvergenceTable* t : {&rep.normal, &rep.temporal, &rep.tangential})
    for (const auto& r : t->rungs)
      os << t->parameter << ',' << r.Nx << ',' << r.Nz << ',' << format_double(r.dt) << ',' << format_double(r.error_u) << ','
         << format_double(r.error_f) << ',' << format_double(r.diff_to_next) << ',' << format_double(r.seconds) << '\n';
  return os.str();
}

inline int cmd_mms(const fs::path& out, std::ostream& log) {
  ensure_dir(out);
  const MmsReport rep = manufactured_forcing_residual(decaying_mode_solution(), fixtures::standard_mms_ladder());
  write_file(out / "mms.csv", mms_csv(rep));
  log << "normal order " << format_double(rep.normal.observed_order()) << ", temporal order "
      << format_double(rep.temporal.observed_order()) << '\n';
  log << "wrote " << (out / "mms.csv").string() << '\n';
  return kOk;
}

// Parses argv and dispatches; every error becomes a message on `err` and an exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"mhdl: MHD boundary-layer numerical laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run a configuration and write checkpoints, norms and diagnostics");
  run->add_option("config", config_path, "INI configuration file")->required();

  std::string diag_dir, select = "all";
  auto* diagnose = app.add_subcommand("diagnose", "recompute diagnostics from a run directory");
  diagnose->add_option("dir", diag_dir, "run directory")->required();
  diagnose->add_option("--select", select, "comma-separated diagnostics, 'all' or 'none'");

  std::string norms_dir;
  double rho = 0.0, sigma = 0.0;
  std::optional<int> i_max;
  auto* norms = app.add_subcommand("norms", "composite Gevrey norm series of a run directory");
  norms->add_option("dir", norms_dir, "run directory")->required();
  norms->add_option("--rho", rho, "Gevrey radius")->required();
  norms->add_option("--sigma", sigma, "Gevrey index")->required();
  norms->add_option("--imax", i_max, "highest time-derivative order");

  std::string mms_out = ".";
  auto* mms = app.add_subcommand("mms", "manufactured-solution refinement ladder");
  mms->add_option("--out", mms_out, "output directory for mms.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (*run) {
      std::ostringstream defaults;
      const RunConfig cfg = parse_config(read_file(config_path), &defaults);
      err << defaults.str();
      return cmd_run(cfg, out);
    }
    if (*diagnose) return cmd_diagnose(diag_dir, parse_selection(select), out);
    if (*norms) return cmd_norms(norms_dir, rho, sigma, i_max, out);
    if (*mms) return cmd_mms(mms_out, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const UsageError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  }
  return kConfigError;
}

}  // namespace mhdbl::cli
