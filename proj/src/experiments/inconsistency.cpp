#include <cmath>

#include "sysid/error.hpp"
#include "sysid/experiments.hpp"
#include "sysid/ols.hpp"
#include "sysid/parallel.hpp"

namespace sysid {

namespace {

struct PairTrial {
  double beta_o = 0.0;
  double beta_r = 0.0;
  double error_o = 0.0;
  double error_r = 0.0;
};

}  // namespace

InconsistencyResult inconsistency_experiment(const InconsistencyConfig& cfg) {
  if (!(cfg.a > 1.0)) throw InvalidArgument("inconsistency_experiment: a must exceed 1");
  if (cfg.T < 2) throw InvalidArgument("inconsistency_experiment: T must be >= 2");
  if (cfg.trials < 2) throw InvalidArgument("inconsistency_experiment: trials must be >= 2");
  if (!(cfg.regular_threshold > 0.0)) throw InvalidArgument("inconsistency_experiment: threshold must be positive");
  cfg.noise.validate();

  const SystemSpec irregular = SystemSpec::from_matrix(Matrix::Identity(2, 2) * cfg.a);
  Matrix a_r(2, 2);
  a_r << cfg.a, 1.0, 0.0, cfg.a;
  const SystemSpec regular = SystemSpec::from_matrix(a_r);

  const std::vector<PairTrial> out =
      parallel::map_trials<PairTrial>(static_cast<std::size_t>(cfg.trials), [&](std::size_t i) {
        const std::uint64_t seed = trial_seed(cfg.seed, cfg.T, static_cast<int>(i));
        const EstimateReport eo = ols_estimate(simulate(irregular, cfg.noise, cfg.T, seed), irregular.a);
        const EstimateReport er = ols_estimate(simulate(regular, cfg.noise, cfg.T, seed), regular.a);
        return PairTrial{eo.a_hat(0, 1), er.a_hat(0, 1), *eo.error_opnorm, *er.error_opnorm};
      });

  InconsistencyResult res;
  res.config = cfg;
  long below = 0;
  for (const PairTrial& p : out) {
    res.beta_irregular.push_back(p.beta_o);
    res.beta_regular.push_back(p.beta_r);
    res.error_irregular.push_back(p.error_o);
    res.error_regular.push_back(p.error_r);
    if (p.error_r < cfg.regular_threshold) ++below;
  }
  res.std_beta_irregular = sample_std(res.beta_irregular);
  res.std_beta_regular = sample_std(res.beta_regular);
  res.histogram = freedman_diaconis_histogram(res.beta_irregular);
  res.modes = histogram_modes(res.histogram, 0.5);
  res.regular_fraction_below = static_cast<double>(below) / static_cast<double>(cfg.trials);
  res.summary.per_T.push_back(summarize_errors(cfg.T, res.error_irregular));
  return res;
}

}  // namespace sysid
