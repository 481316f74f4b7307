#include <cmath>

#include <Eigen/Eigenvalues>

#include "sysid/error.hpp"
#include "sysid/experiments.hpp"
#include "sysid/ols.hpp"
#include "sysid/parallel.hpp"

namespace sysid {

namespace {

struct ConcentrationTrial {
  double selfnorm = 0.0;
  double selfnorm_logdet = 0.0;  // log det(Y_T + I)
  double sandwich_min = 0.0;
  double sandwich_max = 0.0;
  double energy = 0.0;  // ||sum_{t=1}^T X_t X_t'||
  double lower = 0.0;   // lambda_min(Y_T) of the near-unit system
};

double log_det_spd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().array().log().sum();
}

InequalityReport make_report(std::string name, double delta, int horizon, long failures, long trials,
                             double nominal) {
  InequalityReport r;
  r.name = std::move(name);
  r.delta = delta;
  r.T = horizon;
  r.violation_freq = static_cast<double>(failures) / static_cast<double>(trials);
  r.std_err = binomial_stderr(r.violation_freq, trials);
  r.nominal = nominal;
  r.within_nominal = r.violation_freq <= nominal;
  return r;
}

// Trial streams per inequality, so changing one horizon leaves the others alone.
constexpr std::uint64_t kSelfnormTag = 1, kSandwichTag = 2, kMarkovTag = 3, kLowerTag = 4;

}  // namespace

double selfnorm_rhs(const Matrix& yt, double delta, double R) {
  const double d = static_cast<double>(yt.rows());
  const double log_det = log_det_spd(yt + Matrix::Identity(yt.rows(), yt.cols()));
  return R * std::sqrt(8.0 * d * (std::log(5.0) + log_det / (2.0 * d) - std::log(delta) / d));
}

ConcentrationResult concentration_suite(const ConcentrationConfig& cfg) {
  if (cfg.trials < 1) throw InvalidArgument("concentration_suite: trials must be >= 1");
  if (cfg.deltas.empty()) throw InvalidArgument("concentration_suite: deltas is empty");
  for (double d : cfg.deltas) {
    if (!(d > 0.0 && d < 1.0)) throw InvalidArgument("concentration_suite: each delta must be in (0, 1)");
  }
  if (cfg.T_selfnorm < 1 || cfg.T_sandwich < 1 || cfg.T_markov < 1 || cfg.T_lower < 1) {
    throw InvalidArgument("concentration_suite: horizons must be >= 1");
  }
  cfg.system.validate();
  cfg.lower_system.validate();
  cfg.noise.validate();
  cfg.constants.validate();
  const int d = cfg.system.dim();
  const Matrix& a = cfg.system.a;

  const std::vector<ConcentrationTrial> out =
      parallel::map_trials<ConcentrationTrial>(static_cast<std::size_t>(cfg.trials), [&](std::size_t i) {
        const auto trial = static_cast<std::uint64_t>(i);
        ConcentrationTrial ct;
        {
          const Trajectory tr = simulate(cfg.system, cfg.noise, cfg.T_selfnorm, derive_stream(cfg.seed, {kSelfnormTag, trial}));
          const CovarianceMartingale cm = covariance_and_martingale(tr);
          ct.selfnorm = selfnorm_statistic(cm.yt, cm.st, Matrix::Identity(d, d));
          ct.selfnorm_logdet = log_det_spd(cm.yt + Matrix::Identity(d, d));
        }
        {
          Rng rng(derive_stream(cfg.seed, {kSandwichTag, trial}));
          const Matrix eta = sample_noise(cfg.noise, cfg.T_sandwich, d, rng);
          const Matrix cov = eta.transpose() * eta / static_cast<double>(cfg.T_sandwich);
          Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
          ct.sandwich_min = es.eigenvalues()(0);
          ct.sandwich_max = es.eigenvalues()(d - 1);
        }
        {
          const Trajectory tr = simulate(cfg.system, cfg.noise, cfg.T_markov, derive_stream(cfg.seed, {kMarkovTag, trial}));
          const Matrix xs = tr.states.bottomRows(cfg.T_markov);
          ct.energy = spectral_norm(xs.transpose() * xs);
        }
        {
          const Trajectory tr =
              simulate(cfg.lower_system, cfg.noise, cfg.T_lower, derive_stream(cfg.seed, {kLowerTag, trial}));
          const CovarianceMartingale cm = covariance_and_martingale(tr);
          Eigen::SelfAdjointEigenSolver<Matrix> es(cm.yt, Eigen::EigenvaluesOnly);
          ct.lower = es.eigenvalues()(0);
        }
        return ct;
      });

  ConcentrationResult res;
  res.config = cfg;
  for (const auto& ct : out) {
    res.selfnorm_values.push_back(ct.selfnorm);
    res.lower_lambda_min.push_back(ct.lower);
  }
  const long n = cfg.trials;
  const double R = cfg.constants.R;
  const double markov_scale = cfg.T_markov * std::exp(log_trace_gramian(a, cfg.T_markov - 1));

  for (double delta : cfg.deltas) {
    long fail = 0;
    for (const auto& ct : out) {
      const double rhs =
          R * std::sqrt(8.0 * d * (std::log(5.0) + ct.selfnorm_logdet / (2.0 * d) - std::log(delta) / d));
      if (ct.selfnorm > rhs) ++fail;
    }
    res.inequalities.push_back(make_report("selfnorm", delta, cfg.T_selfnorm, fail, n, delta));
  }
  for (double delta : cfg.deltas) {
    long fail = 0;
    for (const auto& ct : out) {
      if (ct.sandwich_min < 0.75 || ct.sandwich_max > 1.25) ++fail;
    }
    InequalityReport r = make_report("noise_sandwich", delta, cfg.T_sandwich, fail, n, delta);
    const double t_eta = threshold_T_eta(d, delta, cfg.constants.C);
    if (cfg.T_sandwich <= t_eta) r.regime_flags.push_back("T <= T_eta(delta)");
    res.inequalities.push_back(std::move(r));
  }
  for (double delta : cfg.deltas) {
    long fail = 0;
    for (const auto& ct : out) {
      if (ct.energy > markov_scale / delta) ++fail;
    }
    res.inequalities.push_back(make_report("energy_markov", delta, cfg.T_markov, fail, n, delta));
  }
  {
    const int dl = cfg.lower_system.dim();
    const SpectralReport rep = spectral_report(cfg.lower_system.a, cfg.T_lower, cfg.constants.c);
    std::vector<std::string> flags;
    if (rep.rho_max() > 1.0 + cfg.constants.c / cfg.T_lower) flags.push_back("rho_max > 1 + c/T");
    const double log_tr = log_trace_gramian(cfg.lower_system.a, cfg.T_lower);
    const double need = std::max(threshold_T_eta(dl, 0.05, cfg.constants.C),
                                 threshold_T_s(dl, log_tr, 0.05, cfg.constants.C));
    if (cfg.T_lower < need) flags.push_back("T below max(T_eta, T_s)");
    for (const auto& [name, factor] : {std::pair<const char*, double>{"lower_bound", 0.25}, {"lower_bound_slack", 0.125}}) {
      long fail = 0;
      for (const auto& ct : out) {
        if (ct.lower < factor * cfg.T_lower * R * R) ++fail;
      }
      InequalityReport r = make_report(name, 0.05, cfg.T_lower, fail, n, 0.05);
      r.regime_flags = flags;
      res.inequalities.push_back(std::move(r));
    }
  }
  return res;
}

}  // namespace sysid
