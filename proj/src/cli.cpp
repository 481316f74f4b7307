#include "sysid/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "sysid/bounds.hpp"
#include "sysid/config.hpp"
#include "sysid/error.hpp"
#include "sysid/matrix_io.hpp"
#include "sysid/ols.hpp"
#include "sysid/outputs.hpp"
#include "sysid/runner.hpp"

namespace sysid::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> delta;
  std::optional<int> trials;
  bool quiet = false;

  std::optional<int> horizon;
  bool scaled = false;
  std::string trajectory_path;
  std::string noise_path;
  std::string matrix_path;
  std::string kind;
};

Config load_config(const Options& o) {
  Config cfg;
  if (!o.config_path.empty()) {
    cfg = parse_config(o.config_path);
  } else {
    cfg.base_dir = fs::current_path();
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.delta) {
    if (!(*o.delta > 0.0 && *o.delta < 1.0)) throw InvalidArgument("--delta must be in (0, 1)");
    cfg.delta = *o.delta;
  }
  if (o.trials) {
    if (*o.trials < 1) throw InvalidArgument("--trials must be a positive integer");
    cfg.trials = *o.trials;
  }
  if (o.horizon) {
    if (*o.horizon < 1) throw InvalidArgument("--T must be a positive integer");
    cfg.T = *o.horizon;
  }
  return cfg;
}

int require_horizon(const Config& cfg, const char* what) {
  if (!cfg.T) throw InvalidArgument(std::string(what) + ": a horizon is required (set T in the config or pass --T)");
  return *cfg.T;
}

std::string trajectory_csv(const Trajectory& traj) {
  const int d = traj.dim();
  const int p = traj.inputs ? static_cast<int>(traj.inputs->cols()) : 0;
  const char prefix = traj.scaled ? 'z' : 'x';
  std::string out = "t";
  for (int i = 1; i <= d; ++i) out += std::string(",") + prefix + std::to_string(i);
  for (int i = 1; i <= p; ++i) out += ",u" + std::to_string(i);
  out += "\n";
  for (Eigen::Index t = 0; t < traj.states.rows(); ++t) {
    out += std::to_string(t);
    for (int i = 0; i < d; ++i) out += "," + format_double(traj.states(t, i));
    for (int i = 0; i < p; ++i) {
      out += "," + format_double(t < traj.inputs->rows() ? (*traj.inputs)(t, i) : std::nan(""));
    }
    out += "\n";
  }
  return out;
}

std::string noise_csv(const Trajectory& traj) {
  std::string out = "t";
  for (int i = 1; i <= traj.noises.cols(); ++i) out += ",e" + std::to_string(i);
  out += "\n";
  for (Eigen::Index t = 0; t < traj.noises.rows(); ++t) {
    out += std::to_string(t + 1);
    for (Eigen::Index i = 0; i < traj.noises.cols(); ++i) out += "," + format_double(traj.noises(t, i));
    out += "\n";
  }
  return out;
}

// Splits a headed CSV into its header cells and numeric body.
std::pair<std::vector<std::string>, Matrix> read_headed_csv(const fs::path& path) {
  const std::string text = read_file(path);
  const auto nl = text.find('\n');
  if (nl == std::string::npos) throw InvalidArgument(path.string() + ": missing header or data");
  std::vector<std::string> header;
  std::istringstream hs(text.substr(0, nl));
  std::string cell;
  while (std::getline(hs, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    header.push_back(cell);
  }
  const Matrix body = matrix_from_csv(std::string_view(text).substr(nl + 1), path.string());
  if (body.cols() != static_cast<Eigen::Index>(header.size())) {
    throw InvalidArgument(path.string() + ": header and data column counts differ");
  }
  return {header, body};
}

Trajectory load_trajectory(const fs::path& traj_path, const std::string& noise_path) {
  const auto [header, body] = read_headed_csv(traj_path);
  std::vector<Eigen::Index> xcols, ucols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& h = header[i];
    if (h.size() > 1 && h[0] == 'x') xcols.push_back(static_cast<Eigen::Index>(i));
    else if (h.size() > 1 && h[0] == 'u') ucols.push_back(static_cast<Eigen::Index>(i));
    else if (h.size() > 1 && h[0] == 'z') throw InvalidArgument(traj_path.string() + ": scaled trajectories cannot be estimated from CSV");
  }
  if (xcols.empty() || body.rows() < 2) throw InvalidArgument(traj_path.string() + ": need x columns and at least two rows");
  Trajectory traj;
  const Eigen::Index rows = body.rows();
  traj.states.resize(rows, static_cast<Eigen::Index>(xcols.size()));
  for (std::size_t j = 0; j < xcols.size(); ++j) traj.states.col(static_cast<Eigen::Index>(j)) = body.col(xcols[j]);
  if (!ucols.empty()) {
    Matrix u(rows - 1, static_cast<Eigen::Index>(ucols.size()));
    for (std::size_t j = 0; j < ucols.size(); ++j) u.col(static_cast<Eigen::Index>(j)) = body.col(ucols[j]).head(rows - 1);
    traj.inputs = u;
  }
  if (!noise_path.empty()) {
    const auto [nh, nb] = read_headed_csv(noise_path);
    if (nb.rows() != rows - 1 || nb.cols() != static_cast<Eigen::Index>(xcols.size()) + 1) {
      throw DimensionError(noise_path + ": expected " + std::to_string(rows - 1) + " rows of t plus one column per state");
    }
    traj.noises = nb.rightCols(nb.cols() - 1);
  }
  return traj;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const Config cfg = load_config(o);
  const SystemSpec spec = build_system(cfg.system, cfg.base_dir);
  const int horizon = require_horizon(cfg, "simulate");
  const Trajectory traj =
      o.scaled ? simulate_scaled(spec, cfg.noise, horizon, cfg.seed) : simulate(spec, cfg.noise, horizon, cfg.seed);
  OutputBundle b;
  b.kind = "simulate";
  b.results = {{"T", horizon}, {"d", spec.dim()}, {"p", spec.input_dim()}, {"scaled", o.scaled}};
  if (!o.scaled) b.results["recurrence_residual"] = recurrence_residual(traj, spec);
  b.extra.push_back({"trajectory.csv", trajectory_csv(traj)});
  b.extra.push_back({"noise.csv", noise_csv(traj)});
  const json sidecar = {{"seed", config_to_json(cfg)["seed"]},
                        {"config_hash", hex64(config_hash(cfg))},
                        {"noise", config_to_json(cfg)["noise"]},
                        {"scaled", o.scaled},
                        {"T", horizon}};
  b.extra.push_back({"trajectory.json", sidecar.dump(2) + "\n"});
  write_outputs(o.out_dir, cfg, b);
  if (!o.quiet) out << "simulate: T=" << horizon << " " << provenance_stamp(cfg) << " -> " << o.out_dir << "\n";
  return kOk;
}

int cmd_estimate(const Options& o, std::ostream& out) {
  const Config cfg = load_config(o);
  std::optional<SystemSpec> spec;
  if (cfg.system.kind != SystemSource::Kind::none) spec = build_system(cfg.system, cfg.base_dir);
  Trajectory traj;
  if (!o.trajectory_path.empty()) {
    traj = load_trajectory(o.trajectory_path, o.noise_path);
  } else {
    if (!spec) throw InvalidArgument("estimate: give --trajectory or a config with a [system] table");
    traj = simulate(*spec, cfg.noise, require_horizon(cfg, "estimate"), cfg.seed);
  }
  std::optional<Matrix> true_a, true_b;
  if (spec) {
    if (spec->dim() != traj.dim()) throw DimensionError("estimate: configured A does not match the trajectory dimension");
    true_a = spec->a;
    if (spec->b && traj.inputs && spec->b->cols() == traj.inputs->cols()) true_b = *spec->b;
  }
  const EstimateReport rep = ols_estimate(traj, true_a, kMachineEps, true_b);
  OutputBundle b;
  b.kind = "estimate";
  b.results = to_json(rep);
  b.results["T"] = traj.states.rows() - 1;
  b.results["source"] = o.trajectory_path.empty() ? "simulated" : "file";
  b.extra.push_back({"a_hat.csv", matrix_to_csv(rep.a_hat)});
  write_outputs(o.out_dir, cfg, b);
  if (!o.quiet) {
    out << "estimate: T=" << traj.states.rows() - 1 << " " << provenance_stamp(cfg);
    if (rep.error_opnorm) out << " error=" << format_double(*rep.error_opnorm);
    out << " -> " << o.out_dir << "\n";
  }
  return kOk;
}

int cmd_bounds(const Options& o, std::ostream& out) {
  const Config cfg = load_config(o);
  Matrix a;
  std::optional<KnownJordan> jordan;
  if (!o.matrix_path.empty()) {
    a = read_matrix_csv(o.matrix_path);
  } else {
    const SystemSpec spec = build_system(cfg.system, cfg.base_dir);
    a = spec.a;
    jordan = known_jordan(spec);
  }
  require_square(a, "bounds");
  const int horizon = require_horizon(cfg, "bounds");
  const BoundReport rep = regime_error_bound(a, jordan, cfg.delta, horizon, cfg.constants, cfg.bounds);
  OutputBundle b;
  b.kind = "bounds";
  b.results = to_json(rep);
  if (a.rows() == 1 && a(0, 0) >= 1.1) {
    const LowerBound1d lb = minimax_lower_bound_1d(a(0, 0), cfg.delta, horizon, cfg.constants.C);
    b.results["minimax_lower_bound"] = {{"value", lb.value}, {"branch", lb.branch}};
  }
  write_outputs(o.out_dir, cfg, b);
  if (!o.quiet) {
    out << "bounds: rate " << rep.rate;
    if (rep.error_upper_bound) out << ", bound " << format_double(*rep.error_upper_bound);
    out << " " << provenance_stamp(cfg) << " -> " << o.out_dir << "\n";
  }
  return kOk;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  const Config cfg = load_config(o);
  const OutputBundle b = run_experiment(o.kind, cfg);
  write_outputs(o.out_dir, cfg, b);
  if (!o.quiet) out << "experiment " << o.kind << ": " << provenance_stamp(cfg) << " -> " << o.out_dir << "\n";
  return kOk;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  const VerifyReport rep = verify_outputs(o.out_dir);
  if (!rep.ok) {
    for (const auto& p : rep.problems) err << "verify: " << p << "\n";
    return kIo;
  }
  if (!o.quiet) out << "verify: " << o.out_dir << " OK\n";
  return kOk;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InvalidArgument*>(&e)) return kUsage;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kIo;
  return kNumeric;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Finite-time identification of linear dynamical systems by least squares", "sysid"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config_path, "TOML or JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", o.seed, "Override the config seed");
  app.add_option("--delta", o.delta, "Override the failure probability");
  app.add_option("--trials", o.trials, "Override the trial count");
  app.add_flag("--quiet", o.quiet, "Suppress progress output");

  auto* sim = app.add_subcommand("simulate", "Simulate one trajectory");
  sim->add_option("--T", o.horizon, "Horizon");
  sim->add_flag("--scaled", o.scaled, "Store z_t = A^{-t} x_t instead of x_t");
  auto* est = app.add_subcommand("estimate", "OLS estimate from a simulated or recorded trajectory");
  est->add_option("--T", o.horizon, "Horizon when simulating");
  est->add_option("--trajectory", o.trajectory_path, "trajectory.csv to read")->check(CLI::ExistingFile);
  est->add_option("--noise", o.noise_path, "noise.csv matching --trajectory")->check(CLI::ExistingFile);
  auto* bnd = app.add_subcommand("bounds", "Finite-time error bound and notation table");
  bnd->add_option("--T", o.horizon, "Horizon");
  bnd->add_option("--matrix", o.matrix_path, "CSV file with A (instead of the config system)")->check(CLI::ExistingFile);
  auto* exp = app.add_subcommand("experiment", "Run a Monte Carlo experiment");
  exp->add_option("kind", o.kind, "rate | inconsistency | spectrum | concentration | structure")
      ->required()
      ->check(CLI::IsMember(experiment_kinds()));
  auto* ver = app.add_subcommand("verify", "Re-hash the config and artifacts in --out");

  std::vector<std::string> argv_store{"sysid"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "sysid: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o, out);
    if (est->parsed()) return cmd_estimate(o, out);
    if (bnd->parsed()) return cmd_bounds(o, out);
    if (exp->parsed()) return cmd_experiment(o, out);
    if (ver->parsed()) return cmd_verify(o, out, err);
  } catch (const std::exception& e) {
    err << "sysid: " << e.what() << "\n";
    return exit_code_for(e);
  }
  err << app.help();
  return kUsage;
}

}  // namespace sysid::cli
