#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "sysid/error.hpp"
#include "sysid/experiments.hpp"
#include "sysid/parallel.hpp"

namespace sysid {

std::pair<double, double> log_sigma_pair_scalar_identity(const Trajectory& scaled, double a) {
  if (!scaled.scaled) throw InvalidArgument("log_sigma_pair: trajectory must be scaled");
  if (scaled.dim() != 2) throw DimensionError("log_sigma_pair: system must be two-dimensional");
  if (!(a > 1.0)) throw InvalidArgument("log_sigma_pair: a must exceed 1");
  const int horizon = scaled.horizon();
  if (horizon < 3) throw InvalidArgument("log_sigma_pair: T must be >= 3");
  const double log_a = std::log(a);
  const double inv_a = 1.0 / a;
  const Matrix& z = scaled.states;
  const Matrix& eta = scaled.noises;

  // Y_T = a^{2(T-1)} sum_{t<T} a^{-2(T-1-t)} z_t z_t'.
  Eigen::Matrix2d u = Eigen::Matrix2d::Zero();
  for (int t = 0; t < horizon; ++t) {
    u *= inv_a * inv_a;
    u += z.row(t).transpose() * z.row(t);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(u, Eigen::EigenvaluesOnly);
  const double log_sigma1 = 2.0 * (horizon - 1) * log_a + std::log(es.eigenvalues()(1));

  // det Y_T = sum_{s<t<T} (x_s ^ x_t)^2 with x_s ^ x_t = a^t (z_s ^ G_{s,t}),
  // G_{s,t} = a^s (z_t - z_s) = a^{-1} (eta_{s+1} + G_{s+1,t}).
  double log_det = -std::numeric_limits<double>::infinity();
  for (int t = 1; t < horizon; ++t) {
    double inner = 0.0;
    double g0 = 0.0, g1 = 0.0;
    for (int s = t - 1; s >= 0; --s) {
      g0 = inv_a * (eta(s, 0) + g0);
      g1 = inv_a * (eta(s, 1) + g1);
      const double w = z(s, 0) * g1 - z(s, 1) * g0;
      inner += w * w;
    }
    if (inner <= 0.0) continue;
    const double term = 2.0 * t * log_a + std::log(inner);
    const double hi = std::max(log_det, term);
    log_det = hi + std::log(std::exp(log_det - hi) + std::exp(term - hi));
  }
  return {log_sigma1, log_det - log_sigma1};
}

SpectrumResult spectrum_growth_experiment(const SpectrumConfig& cfg) {
  if (!(cfg.a > 1.0)) throw InvalidArgument("spectrum_growth_experiment: a must exceed 1");
  if (cfg.trials < 1) throw InvalidArgument("spectrum_growth_experiment: trials must be >= 1");
  if (cfg.T_grid.size() < 2) throw InvalidArgument("spectrum_growth_experiment: need at least two T values");
  for (std::size_t i = 0; i < cfg.T_grid.size(); ++i) {
    if (cfg.T_grid[i] < 3 || (i > 0 && cfg.T_grid[i] <= cfg.T_grid[i - 1])) {
      throw InvalidArgument("spectrum_growth_experiment: T_grid must be strictly ascending and >= 3");
    }
  }
  const SystemSpec sys = SystemSpec::from_matrix(Matrix::Identity(2, 2) * cfg.a);
  const auto trials = static_cast<std::size_t>(cfg.trials);
  const std::size_t total = cfg.T_grid.size() * trials;
  using Pair = std::pair<double, double>;
  const std::vector<Pair> out = parallel::map_trials<Pair>(total, [&](std::size_t i) {
    const int horizon = cfg.T_grid[i / trials];
    const Trajectory traj =
        simulate_scaled(sys, NoiseModel::gaussian(), horizon, trial_seed(cfg.seed, horizon, static_cast<int>(i % trials)));
    return log_sigma_pair_scalar_identity(traj, cfg.a);
  });

  SpectrumResult res;
  res.config = cfg;
  res.raw = out;
  std::vector<double> xs, y1, y2;
  for (std::size_t g = 0; g < cfg.T_grid.size(); ++g) {
    std::vector<double> s1, s2;
    for (std::size_t k = 0; k < trials; ++k) {
      s1.push_back(out[g * trials + k].first);
      s2.push_back(out[g * trials + k].second);
    }
    SpectrumCell cell{cfg.T_grid[g], median(s1), median(s2)};
    res.cells.push_back(cell);
    xs.push_back(cell.T);
    y1.push_back(cell.median_log_sigma1);
    y2.push_back(cell.median_log_sigma2);
  }
  res.fit_sigma1 = fit_linear(xs, y1);
  res.fit_sigma2 = fit_linear(xs, y2);
  res.log_cond_slope = res.fit_sigma1.slope - res.fit_sigma2.slope;
  return res;
}

}  // namespace sysid
