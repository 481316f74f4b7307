#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "sysid/error.hpp"
#include "sysid/experiments.hpp"
#include "sysid/ols.hpp"
#include "sysid/parallel.hpp"

namespace sysid {

namespace {

double lambda_min_abs(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return std::abs(es.eigenvalues()(0));
}

}  // namespace

StructureResult structure_checks(const StructureConfig& cfg) {
  if (cfg.trials < 1) throw InvalidArgument("structure_checks: trials must be >= 1");
  if (cfg.floor_T < 1) throw InvalidArgument("structure_checks: floor_T must be >= 1");
  StructureResult res;
  res.config = cfg;

  for (const JordanSpec& spec : cfg.gramian_specs) {
    const Matrix a = realize(spec).a;
    GramianGrowth g;
    g.spec = spec;
    for (int t : cfg.gramian_t_grid) {
      if (t < 1) throw InvalidArgument("structure_checks: Gramian t must be >= 1");
      Eigen::SelfAdjointEigenSolver<Matrix> es(gramian(a, t), Eigen::EigenvaluesOnly);
      g.ratio.emplace_back(t, es.eigenvalues()(0) / t);
    }
    if (!g.ratio.empty()) {
      const auto [lo, hi] = std::minmax_element(g.ratio.begin(), g.ratio.end(),
                                                [](const auto& x, const auto& y) { return x.second < y.second; });
      g.min_ratio = lo->second;
      g.max_ratio = hi->second;
    }
    res.gramian.push_back(std::move(g));
  }

  const auto trials = static_cast<std::size_t>(cfg.trials);
  for (std::size_t si = 0; si < cfg.gap_specs.size(); ++si) {
    const JordanSpec& spec = cfg.gap_specs[si];
    const SystemSpec sys = SystemSpec::from_jordan(spec);
    GapDecay gd;
    gd.spec = spec;
    gd.rho_min = spectral_report(sys.a, 1).rho_min();
    if (!(gd.rho_min > 1.0)) throw InvalidArgument("structure_checks: gap systems must be explosive");
    std::vector<double> xs, ys;
    for (int horizon : cfg.gap_T_grid) {
      const std::vector<double> gaps = parallel::map_trials<double>(trials, [&](std::size_t k) {
        const std::uint64_t seed = derive_stream(cfg.seed, {si, static_cast<std::uint64_t>(horizon), k});
        return explosive_pair(simulate_scaled(sys, NoiseModel::gaussian(), horizon, seed), sys.a).gap_opnorm;
      });
      const double m = median(gaps);
      gd.median_gap.emplace_back(horizon, m);
      if (m > 0.0) {
        xs.push_back(horizon);
        ys.push_back(std::log(m));
      }
    }
    if (xs.size() >= 2) gd.fit = fit_linear(xs, ys);
    res.gaps.push_back(std::move(gd));
  }

  const SystemSpec reg = SystemSpec::from_jordan(cfg.floor_regular);
  const SystemSpec irr = SystemSpec::from_jordan(cfg.floor_irregular);
  const std::vector<std::pair<double, double>> floors =
      parallel::map_trials<std::pair<double, double>>(trials, [&](std::size_t k) {
        const std::uint64_t seed = derive_stream(cfg.seed, {0xf1007ULL, k});
        const double r = lambda_min_abs(explosive_pair(simulate_scaled(reg, NoiseModel::gaussian(), cfg.floor_T, seed), reg.a).ft);
        const double i = lambda_min_abs(explosive_pair(simulate_scaled(irr, NoiseModel::gaussian(), cfg.floor_T, seed), irr.a).ft);
        return std::pair{r, i};
      });
  res.floor_regular_min = std::numeric_limits<double>::infinity();
  res.floor_irregular_max = 0.0;
  for (const auto& [r, i] : floors) {
    res.floor_regular_min = std::min(res.floor_regular_min, r);
    res.floor_irregular_max = std::max(res.floor_irregular_max, i);
  }
  return res;
}

}  // namespace sysid
