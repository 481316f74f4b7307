#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sysid/bounds.hpp"
#include "sysid/lti_sim.hpp"
#include "sysid/stats.hpp"

namespace sysid {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Seed of trial `trial` at horizon `horizon` of an experiment. Keyed by the
/// T value, so adding grid points leaves existing cells unchanged.
std::uint64_t trial_seed(std::uint64_t experiment_seed, int horizon, int trial);

struct TrialRecord {
  int T = 0;
  int trial = 0;
  double error = 0.0;
  double lambda_min_yt = kNaN;
  double selfnorm = kNaN;
};

struct PerTSummary {
  int T = 0;
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  double mean = 0.0;
  std::map<std::string, double> violation_freq;
};

struct McSummary {
  std::vector<PerTSummary> per_T;
};

PerTSummary summarize_errors(int horizon, const std::vector<double>& errors);

// ---------------------------------------------------------------------------
// Rate sweep

inline constexpr double kUnscaledLogLimit = 300.0;

struct RateSweepConfig {
  SystemSpec system;
  NoiseModel noise;
  std::vector<int> T_grid;
  int trials = 200;
  std::uint64_t seed = 0;
  double delta = 0.05;
  BoundConstants constants;
  double log_magnitude_cap = 650.0;
};

struct RateSweepResult {
  McSummary summary;
  /// Absent when fewer than two grid points have a positive median error.
  std::optional<RateFit> fit;
  /// "log T" (power-law fit of log median error) or "T" (explosive).
  std::string fit_axis;
  std::vector<TrialRecord> raw;
  bool explosive = false;
  bool scaled_pipeline = false;
  /// With B present the error is ||[A B] - [A_hat B_hat]||.
  bool joint_error = false;
  /// Explosive sweeps keep T <= log_magnitude_cap / log rho_max.
  std::optional<double> T_cap;
  std::vector<int> T_dropped;
};

/// Errors use the true A; the self-normalized bound violation is recorded per
/// T for unscaled runs. Explosive systems (every eigenvalue in S2 at the
/// largest T) fit log error against T and switch to the scaled estimator once
/// T log rho_max exceeds kUnscaledLogLimit, where Y_T would overflow.
RateSweepResult run_rate_sweep(const RateSweepConfig& config);

// ---------------------------------------------------------------------------
// Inconsistency

struct InconsistencyConfig {
  double a = 1.1;
  int T = 1000;
  int trials = 2000;
  std::uint64_t seed = 0;
  NoiseModel noise;
  double regular_threshold = 0.05;
};

struct InconsistencyResult {
  InconsistencyConfig config;
  std::vector<double> beta_irregular;  // A_hat(0,1) for A_o = a I
  std::vector<double> beta_regular;    // A_hat(0,1) for A_r = [[a, 1], [0, a]]
  std::vector<double> error_irregular;
  std::vector<double> error_regular;
  double std_beta_irregular = 0.0;
  double std_beta_regular = 0.0;
  Histogram histogram;
  std::vector<double> modes;
  double regular_fraction_below = 0.0;
  McSummary summary;
};

InconsistencyResult inconsistency_experiment(const InconsistencyConfig& config);

// ---------------------------------------------------------------------------
// Spectrum growth

struct SpectrumConfig {
  double a = 1.1;
  std::vector<int> T_grid;
  int trials = 100;
  std::uint64_t seed = 0;
};

struct SpectrumCell {
  int T = 0;
  double median_log_sigma1 = 0.0;
  double median_log_sigma2 = 0.0;
};

struct SpectrumResult {
  SpectrumConfig config;
  std::vector<SpectrumCell> cells;
  RateFit fit_sigma1;  // median log sigma_1(Y_T) against T
  RateFit fit_sigma2;
  double log_cond_slope = 0.0;
  /// Per (T, trial): log sigma_1, log sigma_2.
  std::vector<std::pair<double, double>> raw;
};

/// log sigma_1 and log sigma_2 of Y_T = sum_{t<T} x_t x_t' for a scaled
/// trajectory of a I_2, in the log domain. sigma_2 comes from det(Y_T) by
/// Cauchy-Binet over pairs (s, t), with x_s ^ x_t built from noise increments.
std::pair<double, double> log_sigma_pair_scalar_identity(const Trajectory& scaled, double a);

SpectrumResult spectrum_growth_experiment(const SpectrumConfig& config);

// ---------------------------------------------------------------------------
// Concentration

struct ConcentrationConfig {
  SystemSpec system;  // stable system for (i)-(iii)
  NoiseModel noise;
  int T_selfnorm = 512;
  int T_sandwich = 2048;
  int T_markov = 512;
  SystemSpec lower_system;  // near-unit system for (iv)
  int T_lower = 4096;
  std::vector<double> deltas{0.05, 0.1};
  int trials = 1000;
  std::uint64_t seed = 0;
  BoundConstants constants;
};

struct InequalityReport {
  std::string name;
  double delta = 0.0;
  int T = 0;
  /// Fraction of trials where the inequality failed.
  double violation_freq = 0.0;
  double std_err = 0.0;
  /// Nominal failure probability (delta, or 0.05 for the lower bound).
  double nominal = 0.0;
  bool within_nominal = false;
  std::vector<std::string> regime_flags;
};

struct ConcentrationResult {
  ConcentrationConfig config;
  std::vector<InequalityReport> inequalities;
  /// Per trial: the self-normalized statistic at T_selfnorm and
  /// lambda_min(Y_T) of the near-unit system at T_lower.
  std::vector<double> selfnorm_values;
  std::vector<double> lower_lambda_min;
};

/// Right-hand side of the self-normalized bound with V = I.
double selfnorm_rhs(const Matrix& yt, double delta, double R);

ConcentrationResult concentration_suite(const ConcentrationConfig& config);

// ---------------------------------------------------------------------------
// Structure checks

struct StructureConfig {
  std::vector<JordanSpec> gramian_specs{JordanSpec::single(1.0, 2), JordanSpec::single(1.0, 3)};
  std::vector<int> gramian_t_grid{16, 32, 64, 128, 256, 512, 1024};
  std::vector<JordanSpec> gap_specs{JordanSpec::single(1.5, 1), JordanSpec::single(1.5, 2)};
  std::vector<int> gap_T_grid{20, 40, 60, 80, 100, 120, 140, 160, 180, 200, 220, 240, 260, 280, 300};
  JordanSpec floor_regular = JordanSpec::single(1.5, 2);
  JordanSpec floor_irregular = JordanSpec::diagonal({1.5, 1.5});
  int floor_T = 60;
  int trials = 100;
  std::uint64_t seed = 0;
};

struct GramianGrowth {
  JordanSpec spec;
  std::vector<std::pair<int, double>> ratio;  // (t, sigma_min(Gamma_t) / t)
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

struct GapDecay {
  JordanSpec spec;
  double rho_min = 0.0;
  std::vector<std::pair<int, double>> median_gap;
  RateFit fit;  // log median gap against T
};

struct StructureResult {
  StructureConfig config;
  std::vector<GramianGrowth> gramian;
  std::vector<GapDecay> gaps;
  double floor_regular_min = 0.0;    // min over trials of sigma_min(F_T)
  double floor_irregular_max = 0.0;  // max over trials of sigma_min(F_T)
};

StructureResult structure_checks(const StructureConfig& config);

}  // namespace sysid
