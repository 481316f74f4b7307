#include "sysid/outputs.hpp"

#include <cmath>
#include <sstream>
#include <type_traits>

#include "sysid/error.hpp"
#include "sysid/matrix_io.hpp"

namespace sysid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// NaN and infinities become null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

template <class T>
json opt(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) {
    return num(*v);
  } else {
    return json(*v);
  }
}

json classes_json(const std::vector<RegimeClass>& cs) {
  json arr = json::array();
  for (RegimeClass c : cs) arr.push_back(std::string(to_string(c)));
  return arr;
}

json jordan_json(const JordanSpec& spec) {
  json arr = json::array();
  for (const JordanBlock& b : spec.blocks) {
    arr.push_back({{"re", b.eigenvalue.real()}, {"im", b.eigenvalue.imag()}, {"size", b.size}});
  }
  return arr;
}

json pairs_json(const std::vector<std::pair<int, double>>& v) {
  json arr = json::array();
  for (const auto& [t, y] : v) arr.push_back({t, num(y)});
  return arr;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string raw_csv(const std::vector<TrialRecord>& rows) {
  std::string out(kRawHeader);
  out += "\n";
  for (const TrialRecord& r : rows) {
    out += std::to_string(r.T) + "," + std::to_string(r.trial) + "," + format_double(r.error) + "," +
           format_double(r.lambda_min_yt) + "," + format_double(r.selfnorm) + "\n";
  }
  return out;
}

std::vector<TrialRecord> parse_raw_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kRawHeader) {
    throw InvalidArgument("raw.csv: header must be exactly '" + std::string(kRawHeader) + "'");
  }
  std::vector<TrialRecord> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != 5) throw InvalidArgument("raw.csv:" + std::to_string(lineno) + ": expected 5 fields");
    TrialRecord r;
    r.T = static_cast<int>(parse_double(cells[0]));
    r.trial = static_cast<int>(parse_double(cells[1]));
    r.error = parse_double(cells[2]);
    r.lambda_min_yt = parse_double(cells[3]);
    r.selfnorm = parse_double(cells[4]);
    rows.push_back(r);
  }
  return rows;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const RateFit& f) {
  return {{"slope", num(f.slope)}, {"intercept", num(f.intercept)}, {"r_squared", num(f.r_squared)}, {"points", f.points}};
}

json to_json(const McSummary& s) {
  json arr = json::array();
  for (const PerTSummary& p : s.per_T) {
    json v = json::object();
    for (const auto& [k, f] : p.violation_freq) v[k] = num(f);
    arr.push_back({{"T", p.T},
                   {"median_error", num(p.median)},
                   {"q10", num(p.q10)},
                   {"q90", num(p.q90)},
                   {"mean", num(p.mean)},
                   {"violation_freq", v}});
  }
  return {{"per_T", arr}};
}

json to_json(const RateSweepResult& r) {
  return {{"summary", to_json(r.summary)},
          {"fit", r.fit ? to_json(*r.fit) : json(nullptr)},
          {"fit_axis", r.fit_axis},
          {"explosive", r.explosive},
          {"scaled_pipeline", r.scaled_pipeline},
          {"joint_error", r.joint_error},
          {"T_cap", opt(r.T_cap)},
          {"T_dropped", r.T_dropped}};
}

json to_json(const InconsistencyResult& r) {
  json hist = {{"edges", json::array()}, {"counts", r.histogram.counts}};
  for (double e : r.histogram.edges) hist["edges"].push_back(num(e));
  json modes = json::array();
  for (double m : r.modes) modes.push_back(num(m));
  return {{"a", r.config.a},
          {"T", r.config.T},
          {"trials", r.config.trials},
          {"std_beta_irregular", num(r.std_beta_irregular)},
          {"std_beta_regular", num(r.std_beta_regular)},
          {"modes", modes},
          {"histogram", hist},
          {"regular_threshold", r.config.regular_threshold},
          {"regular_fraction_below", num(r.regular_fraction_below)},
          {"median_error_irregular", num(median(r.error_irregular))},
          {"median_error_regular", num(median(r.error_regular))},
          {"summary", to_json(r.summary)}};
}

json to_json(const SpectrumResult& r) {
  json cells = json::array();
  for (const SpectrumCell& c : r.cells) {
    cells.push_back({{"T", c.T}, {"median_log_sigma1", num(c.median_log_sigma1)}, {"median_log_sigma2", num(c.median_log_sigma2)}});
  }
  return {{"a", r.config.a},
          {"trials", r.config.trials},
          {"cells", cells},
          {"fit_log_sigma1", to_json(r.fit_sigma1)},
          {"fit_log_sigma2", to_json(r.fit_sigma2)},
          {"log_cond_slope", num(r.log_cond_slope)}};
}

json to_json(const ConcentrationResult& r) {
  json arr = json::array();
  for (const InequalityReport& q : r.inequalities) {
    arr.push_back({{"name", q.name},
                   {"delta", q.delta},
                   {"T", q.T},
                   {"violation_freq", num(q.violation_freq)},
                   {"std_err", num(q.std_err)},
                   {"nominal", q.nominal},
                   {"within_nominal", q.within_nominal},
                   {"regime_flags", q.regime_flags}});
  }
  return {{"trials", r.config.trials}, {"inequalities", arr}};
}

json to_json(const StructureResult& r) {
  json gram = json::array();
  for (const GramianGrowth& g : r.gramian) {
    gram.push_back({{"jordan", jordan_json(g.spec)},
                    {"ratio", pairs_json(g.ratio)},
                    {"min_ratio", num(g.min_ratio)},
                    {"max_ratio", num(g.max_ratio)}});
  }
  json gaps = json::array();
  for (const GapDecay& g : r.gaps) {
    gaps.push_back({{"jordan", jordan_json(g.spec)},
                    {"rho_min", num(g.rho_min)},
                    {"median_gap", pairs_json(g.median_gap)},
                    {"fit", to_json(g.fit)}});
  }
  return {{"gramian", gram},
          {"gaps", gaps},
          {"floor_T", r.config.floor_T},
          {"trials", r.config.trials},
          {"floor_regular_min", num(r.floor_regular_min)},
          {"floor_irregular_max", num(r.floor_irregular_max)}};
}

json to_json(const NotationTable& t) {
  json j = {{"d", t.d},
            {"T", t.horizon},
            {"delta", t.delta},
            {"constants", {{"C", t.constants.C}, {"c", t.constants.c}, {"R", t.constants.R}}},
            {"log_trace_gramian", num(t.log_trace_gramian)},
            {"T_eta", num(t.T_eta)},
            {"T_s", num(t.T_s)},
            {"c_A_delta", num(t.c_A_delta)},
            {"T_ms", num(t.T_ms)},
            {"gamma_s", num(t.gamma_s)},
            {"gamma_ms", num(t.gamma_ms)}};
  if (t.beta0) {
    j["beta0"] = {{"beta0", num(t.beta0->beta0)},
                  {"k", t.beta0->k},
                  {"target", num(t.beta0->target)},
                  {"at_boundary", t.beta0->at_boundary}};
  } else {
    j["beta0"] = nullptr;
  }
  if (t.psi) {
    j["psi"] = {{"psi_hat", num(t.psi->psi_hat)},
                {"std_err", num(t.psi->std_err)},
                {"samples", t.psi->samples},
                {"internal_T", t.psi->internal_T}};
  }
  if (t.phi) j["phi"] = {{"phi_min", num(t.phi->phi_min)}, {"phi_max", num(t.phi->phi_max)}, {"grid_density", t.phi->grid_density}};
  if (t.psi_const) j["psi_const"] = num(*t.psi_const);
  if (t.sigma_max_P) j["sigma_max_P"] = num(*t.sigma_max_P);
  if (t.gamma_A_delta) j["gamma_A_delta"] = num(*t.gamma_A_delta);
  if (t.gamma_e) j["gamma_e"] = num(*t.gamma_e);
  if (t.in_Tu) j["in_Tu"] = *t.in_Tu;
  return j;
}

json to_json(const BoundReport& r) {
  json blocks = json::array();
  for (const BlockBound& b : r.per_block) {
    blocks.push_back({{"regime", std::string(to_string(b.regime))}, {"size", b.size}, {"bound", opt(b.bound)}, {"min_T_ok", b.min_T_ok}});
  }
  return {{"classes", classes_json(r.classes)},
          {"rate", r.rate},
          {"error_upper_bound", opt(r.error_upper_bound)},
          {"stable_union_bound", opt(r.stable_union_bound)},
          {"min_T_ok", r.min_T_ok},
          {"assumptions_violated", r.assumptions_violated},
          {"per_block", blocks},
          {"table", to_json(r.table)}};
}

json to_json(const EstimateReport& r) {
  json spectrum = json::array();
  for (double s : r.yt_spectrum) spectrum.push_back(num(s));
  return {{"a_hat", matrix_to_json(r.a_hat)},
          {"b_hat", r.b_hat ? matrix_to_json(*r.b_hat) : json(nullptr)},
          {"error_opnorm", opt(r.error_opnorm)},
          {"joint_error_opnorm", opt(r.joint_error_opnorm)},
          {"yt_spectrum", spectrum},
          {"rank_deficient", r.rank_deficient}};
}

std::string provenance_stamp(const Config& config) {
  return "seed=" + std::to_string(config.seed) + " config_hash=" + hex64(config_hash(config));
}

std::vector<fs::path> write_outputs(const fs::path& dir, const Config& config, const OutputBundle& bundle) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

  std::vector<Artifact> files;
  if (bundle.raw) files.push_back({"raw.csv", raw_csv(*bundle.raw)});
  for (const Artifact& a : bundle.extra) files.push_back(a);
  if (bundle.plot) {
    const std::string stamp = provenance_stamp(config);
    files.push_back({"plot.dat", "# " + stamp + "\n" + plot_data(*bundle.plot)});
    files.push_back({"plot.gp", gnuplot_script(*bundle.plot, "plot.dat", stamp)});
    files.push_back({"plot.svg", render_svg(*bundle.plot, stamp)});
  }

  std::vector<fs::path> written;
  json artifacts = json::object();
  for (const Artifact& a : files) {
    if (a.name == "summary.json" || fs::path(a.name).has_parent_path()) {
      throw InvalidArgument("write_outputs: invalid artifact name '" + a.name + "'");
    }
    write_file_atomic(dir / a.name, a.contents);
    artifacts[a.name] = hex64(fnv1a64(a.contents));
    written.push_back(dir / a.name);
  }

  json summary = {{"schema_version", kSchemaVersion},
                  {"kind", bundle.kind},
                  {"seed", config_to_json(config)["seed"]},
                  {"config_hash", hex64(config_hash(config))},
                  {"config", config_to_json(config)},
                  {"results", bundle.results},
                  {"artifacts", artifacts}};
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
  written.push_back(dir / "summary.json");
  return written;
}

VerifyReport verify_outputs(const fs::path& dir) {
  VerifyReport rep;
  auto problem = [&](std::string msg) {
    rep.ok = false;
    rep.problems.push_back(std::move(msg));
  };
  json summary;
  try {
    summary = json::parse(read_file(dir / "summary.json"));
  } catch (const json::parse_error& e) {
    problem(std::string("summary.json: not valid JSON: ") + e.what());
    return rep;
  }
  if (!summary.is_object() || summary.value("schema_version", 0) != kSchemaVersion) {
    problem("summary.json: missing or unsupported schema_version");
    return rep;
  }
  if (!summary.contains("config") || !summary.contains("config_hash") || !summary.contains("artifacts")) {
    problem("summary.json: missing config, config_hash or artifacts");
    return rep;
  }
  Config cfg;
  try {
    cfg = parse_config_text(summary.at("config").dump(), ConfigFormat::json, "summary.json config", dir);
  } catch (const Error& e) {
    problem(std::string("summary.json: config echo does not parse: ") + e.what());
    return rep;
  }
  const std::string hash = hex64(config_hash(cfg));
  if (summary.at("config_hash") != hash) problem("summary.json: config_hash does not match the config echo");
  if (summary.value("seed", json()) != config_to_json(cfg)["seed"]) problem("summary.json: seed does not match the config echo");

  const std::string stamp = provenance_stamp(cfg);
  for (const auto& [name, digest] : summary.at("artifacts").items()) {
    std::string contents;
    try {
      contents = read_file(dir / name);
    } catch (const IoError& e) {
      problem(name + ": " + e.what());
      continue;
    }
    if (digest != hex64(fnv1a64(contents))) problem(name + ": digest mismatch");
    if (name.rfind("plot.", 0) == 0 && contents.find(stamp) == std::string::npos) {
      problem(name + ": seed/config stamp missing");
    }
  }
  return rep;
}

}  // namespace sysid
