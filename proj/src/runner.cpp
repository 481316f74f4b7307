#include "sysid/runner.hpp"

#include <algorithm>
#include <cmath>

#include "sysid/error.hpp"
#include "sysid/matrix_io.hpp"

namespace sysid {

namespace {

using nlohmann::json;

const std::vector<int> kDefaultRateGrid{250, 500, 1000, 2000, 4000};
const std::vector<int> kDefaultSpectrumGrid{100, 150, 200, 250, 300, 350, 400, 450, 500};

OutputBundle rate(const Config& cfg) {
  RateSweepConfig rc;
  rc.system = build_system(cfg.system, cfg.base_dir);
  rc.noise = cfg.noise;
  rc.T_grid = cfg.T_grid.empty() ? kDefaultRateGrid : cfg.T_grid;
  rc.trials = cfg.trials.value_or(200);
  rc.seed = cfg.seed;
  rc.delta = cfg.delta;
  rc.constants = cfg.constants;
  const RateSweepResult r = run_rate_sweep(rc);

  OutputBundle b;
  b.kind = "rate";
  b.results = to_json(r);
  b.raw = r.raw;
  PlotSpec p;
  p.title = "OLS error against horizon";
  p.xlabel = "T";
  p.ylabel = r.joint_error ? "||[A B] - [A_hat B_hat]||" : "||A - A_hat||";
  p.logx = !r.explosive;
  p.logy = true;
  PlotSeries med{"median", {}}, lo{"q10", {}}, hi{"q90", {}};
  for (const PerTSummary& s : r.summary.per_T) {
    med.points.emplace_back(s.T, s.median);
    lo.points.emplace_back(s.T, s.q10);
    hi.points.emplace_back(s.T, s.q90);
  }
  p.series = {med, lo, hi};
  b.plot = p;
  return b;
}

OutputBundle inconsistency(const Config& cfg) {
  InconsistencyConfig ic;
  ic.a = cfg.experiment.a;
  ic.T = cfg.T.value_or(1000);
  ic.trials = cfg.trials.value_or(2000);
  ic.seed = cfg.seed;
  ic.noise = cfg.noise;
  ic.regular_threshold = cfg.experiment.regular_threshold;
  const InconsistencyResult r = inconsistency_experiment(ic);

  OutputBundle b;
  b.kind = "inconsistency";
  b.results = to_json(r);
  std::vector<TrialRecord> irregular, regular;
  std::string beta = "trial,beta_irregular,beta_regular\n";
  for (std::size_t i = 0; i < r.beta_irregular.size(); ++i) {
    const int trial = static_cast<int>(i);
    irregular.push_back({ic.T, trial, r.error_irregular[i], kNaN, kNaN});
    regular.push_back({ic.T, trial, r.error_regular[i], kNaN, kNaN});
    beta += std::to_string(trial) + "," + format_double(r.beta_irregular[i]) + "," + format_double(r.beta_regular[i]) + "\n";
  }
  b.raw = irregular;
  b.extra.push_back({"raw_regular.csv", raw_csv(regular)});
  b.extra.push_back({"beta.csv", beta});
  PlotSpec p;
  p.title = "Off-diagonal estimate for a I (irregular)";
  p.xlabel = "beta_hat";
  p.ylabel = "count";
  PlotSeries h{"histogram", {}};
  for (std::size_t i = 0; i < r.histogram.counts.size(); ++i) {
    h.points.emplace_back(r.histogram.center(i), static_cast<double>(r.histogram.counts[i]));
  }
  p.series = {h};
  b.plot = p;
  return b;
}

OutputBundle spectrum(const Config& cfg) {
  SpectrumConfig sc;
  sc.a = cfg.experiment.a;
  sc.T_grid = cfg.T_grid.empty() ? kDefaultSpectrumGrid : cfg.T_grid;
  sc.trials = cfg.trials.value_or(100);
  sc.seed = cfg.seed;
  const SpectrumResult r = spectrum_growth_experiment(sc);

  OutputBundle b;
  b.kind = "spectrum";
  b.results = to_json(r);
  std::vector<TrialRecord> raw;
  std::string csv = "T,trial,log_sigma1,log_sigma2\n";
  const std::size_t trials = static_cast<std::size_t>(sc.trials);
  for (std::size_t i = 0; i < r.raw.size(); ++i) {
    const int horizon = sc.T_grid[i / trials];
    const int trial = static_cast<int>(i % trials);
    raw.push_back({horizon, trial, kNaN, std::exp(r.raw[i].second), kNaN});
    csv += std::to_string(horizon) + "," + std::to_string(trial) + "," + format_double(r.raw[i].first) + "," +
           format_double(r.raw[i].second) + "\n";
  }
  b.raw = raw;
  b.extra.push_back({"spectrum.csv", csv});
  PlotSpec p;
  p.title = "Singular values of Y_T for a I";
  p.xlabel = "T";
  p.ylabel = "median log sigma";
  PlotSeries s1{"log sigma_1", {}}, s2{"log sigma_2", {}};
  for (const SpectrumCell& c : r.cells) {
    s1.points.emplace_back(c.T, c.median_log_sigma1);
    s2.points.emplace_back(c.T, c.median_log_sigma2);
  }
  p.series = {s1, s2};
  b.plot = p;
  return b;
}

OutputBundle concentration(const Config& cfg) {
  ConcentrationConfig cc;
  if (cfg.system.kind == SystemSource::Kind::none) {
    cc.system = SystemSpec::from_matrix(0.9 * Matrix::Identity(2, 2));
  } else {
    cc.system = build_system(cfg.system, cfg.base_dir);
  }
  cc.lower_system = SystemSpec::from_matrix(cfg.experiment.lower_A.value_or(Matrix(0.98 * Matrix::Identity(2, 2))));
  cc.noise = cfg.noise;
  cc.T_selfnorm = cfg.experiment.T_selfnorm;
  cc.T_sandwich = cfg.experiment.T_sandwich;
  cc.T_markov = cfg.experiment.T_markov;
  cc.T_lower = cfg.experiment.T_lower;
  cc.deltas = cfg.experiment.deltas;
  cc.trials = cfg.trials.value_or(1000);
  cc.seed = cfg.seed;
  cc.constants = cfg.constants;
  const ConcentrationResult r = concentration_suite(cc);

  OutputBundle b;
  b.kind = "concentration";
  b.results = to_json(r);
  std::vector<TrialRecord> raw;
  for (std::size_t i = 0; i < r.selfnorm_values.size(); ++i) {
    raw.push_back({cc.T_selfnorm, static_cast<int>(i), kNaN, kNaN, r.selfnorm_values[i]});
  }
  for (std::size_t i = 0; i < r.lower_lambda_min.size(); ++i) {
    raw.push_back({cc.T_lower, static_cast<int>(i), kNaN, r.lower_lambda_min[i], kNaN});
  }
  b.raw = raw;
  PlotSpec p;
  p.title = "Violation frequency by inequality";
  p.xlabel = "delta";
  p.ylabel = "violation frequency";
  std::vector<PlotSeries> series;
  for (const InequalityReport& q : r.inequalities) {
    auto it = std::find_if(series.begin(), series.end(), [&](const PlotSeries& s) { return s.label == q.name; });
    if (it == series.end()) {
      series.push_back({q.name, {}});
      it = series.end() - 1;
    }
    it->points.emplace_back(q.delta, q.violation_freq);
  }
  PlotSeries nominal{"delta", {}};
  for (double d : cc.deltas) nominal.points.emplace_back(d, d);
  std::sort(nominal.points.begin(), nominal.points.end());
  series.push_back(nominal);
  p.series = series;
  b.plot = p;
  return b;
}

OutputBundle structure(const Config& cfg) {
  StructureConfig sc;
  sc.trials = cfg.trials.value_or(sc.trials);
  sc.floor_T = cfg.experiment.floor_T;
  sc.seed = cfg.seed;
  const StructureResult r = structure_checks(sc);

  OutputBundle b;
  b.kind = "structure";
  b.results = to_json(r);
  b.raw = std::vector<TrialRecord>{};
  PlotSpec p;
  p.title = "||U_T - F_T|| for explosive Jordan blocks";
  p.xlabel = "T";
  p.ylabel = "median gap";
  p.logy = true;
  for (const GapDecay& g : r.gaps) {
    PlotSeries s{"J" + std::to_string(g.spec.dimension()) + "(" + format_double(g.rho_min) + ")", {}};
    for (const auto& [t, v] : g.median_gap) s.points.emplace_back(t, v);
    p.series.push_back(s);
  }
  b.plot = p;
  return b;
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"rate", "inconsistency", "spectrum", "concentration", "structure"};
  return kinds;
}

OutputBundle run_experiment(std::string_view kind, const Config& cfg) {
  if (kind == "rate") return rate(cfg);
  if (kind == "inconsistency") return inconsistency(cfg);
  if (kind == "spectrum") return spectrum(cfg);
  if (kind == "concentration") return concentration(cfg);
  if (kind == "structure") return structure(cfg);
  throw InvalidArgument("unknown experiment kind '" + std::string(kind) +
                        "' (expected rate, inconsistency, spectrum, concentration or structure)");
}

}  // namespace sysid
