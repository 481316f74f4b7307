#include <algorithm>
#include <cmath>

#include "sysid/error.hpp"
#include "sysid/experiments.hpp"
#include "sysid/ols.hpp"
#include "sysid/parallel.hpp"
#include "sysid/rng.hpp"

namespace sysid {

namespace {

void validate_grid(const std::vector<int>& grid, const char* what) {
  if (grid.empty()) throw InvalidArgument(std::string(what) + ": T_grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1) throw InvalidArgument(std::string(what) + ": T_grid entries must be >= 1");
    if (i > 0 && grid[i] <= grid[i - 1]) throw InvalidArgument(std::string(what) + ": T_grid must be strictly ascending");
  }
}

struct SweepTrial {
  TrialRecord record;
  bool selfnorm_checked = false;
  bool selfnorm_violated = false;
};

}  // namespace

std::uint64_t trial_seed(std::uint64_t experiment_seed, int horizon, int trial) {
  return derive_stream(experiment_seed, {static_cast<std::uint64_t>(horizon), static_cast<std::uint64_t>(trial)});
}

PerTSummary summarize_errors(int horizon, const std::vector<double>& errors) {
  PerTSummary s;
  s.T = horizon;
  s.median = median(errors);
  s.q10 = quantile(errors, 0.1);
  s.q90 = quantile(errors, 0.9);
  s.mean = mean(errors);
  return s;
}

RateSweepResult run_rate_sweep(const RateSweepConfig& cfg) {
  validate_grid(cfg.T_grid, "run_rate_sweep");
  if (cfg.trials < 1) throw InvalidArgument("run_rate_sweep: trials must be >= 1");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw InvalidArgument("run_rate_sweep: delta must be in (0, 1)");
  cfg.system.validate();
  cfg.noise.validate();
  cfg.constants.validate();

  const Matrix& a = cfg.system.a;
  const SpectralReport rep = spectral_report(a, cfg.T_grid.back(), cfg.constants.C);
  const double log_rho = std::log(rep.rho_max());

  RateSweepResult res;
  res.explosive = rep.only(RegimeClass::S2);
  res.joint_error = cfg.system.b.has_value();
  res.fit_axis = res.explosive ? "T" : "log T";
  std::vector<int> grid;
  for (int t : cfg.T_grid) {
    if (res.explosive && t * log_rho > cfg.log_magnitude_cap) {
      res.T_dropped.push_back(t);
    } else {
      grid.push_back(t);
    }
  }
  if (res.explosive) res.T_cap = cfg.log_magnitude_cap / log_rho;
  if (grid.empty()) throw InvalidArgument("run_rate_sweep: every T exceeds the explosive cap");

  const auto trials = static_cast<std::size_t>(cfg.trials);
  const std::size_t total = grid.size() * trials;
  const std::vector<SweepTrial> out = parallel::map_trials<SweepTrial>(total, [&](std::size_t i) {
    const int horizon = grid[i / trials];
    const int trial = static_cast<int>(i % trials);
    const std::uint64_t seed = trial_seed(cfg.seed, horizon, trial);
    SweepTrial st;
    st.record.T = horizon;
    st.record.trial = trial;
    if (res.explosive && horizon * log_rho > kUnscaledLogLimit) {
      const Trajectory traj = simulate_scaled(cfg.system, cfg.noise, horizon, seed);
      st.record.error = ols_error_scaled(traj, a);
      return st;
    }
    SimOptions opts;
    opts.log_magnitude_cap = cfg.log_magnitude_cap;
    const Trajectory traj = simulate(cfg.system, cfg.noise, horizon, seed, opts);
    const EstimateReport est = ols_estimate(traj, a, kMachineEps, cfg.system.b);
    st.record.error = res.joint_error ? *est.joint_error_opnorm : *est.error_opnorm;
    if (est.yt.allFinite()) {
      st.record.lambda_min_yt = est.yt_spectrum.back();
      st.record.selfnorm = selfnorm_statistic(est.yt, est.st, Matrix::Identity(est.yt.rows(), est.yt.cols()));
      st.selfnorm_checked = true;
      st.selfnorm_violated = st.record.selfnorm > selfnorm_rhs(est.yt, cfg.delta, cfg.constants.R);
    }
    return st;
  });

  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> errors;
    long checked = 0, violated = 0;
    for (std::size_t k = 0; k < trials; ++k) {
      const SweepTrial& st = out[g * trials + k];
      errors.push_back(st.record.error);
      res.raw.push_back(st.record);
      if (st.selfnorm_checked) {
        ++checked;
        if (st.selfnorm_violated) ++violated;
      } else {
        res.scaled_pipeline = true;
      }
    }
    PerTSummary s = summarize_errors(grid[g], errors);
    if (checked > 0) s.violation_freq["selfnorm"] = static_cast<double>(violated) / static_cast<double>(checked);
    res.summary.per_T.push_back(std::move(s));
  }

  std::vector<double> xs, ys;
  for (const PerTSummary& s : res.summary.per_T) {
    if (!(s.median > 0.0)) continue;
    xs.push_back(res.explosive ? static_cast<double>(s.T) : std::log(static_cast<double>(s.T)));
    ys.push_back(std::log(s.median));
  }
  if (xs.size() >= 2) res.fit = fit_linear(xs, ys);
  return res;
}

}  // namespace sysid
