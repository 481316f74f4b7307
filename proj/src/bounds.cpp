#include "sysid/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "sysid/error.hpp"
#include "sysid/parallel.hpp"
#include "sysid/rng.hpp"
#include "sysid/stats.hpp"

namespace sysid {

namespace {

void require_delta(double delta, const char* what) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument(std::string(what) + ": delta must be in (0, 1)");
}

void require_horizon(int horizon, const char* what) {
  if (horizon < 1) throw InvalidArgument(std::string(what) + ": T must be >= 1");
}

// log(exp(x) + 1) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Matrix inverse_or_throw(const Matrix& a, const char* what) {
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) throw NumericError(std::string(what) + ": A is singular");
  return lu.inverse();
}

double lambda_min_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// sigma_max(A^{-k}) for k = 0..k_max and ||A^{-k}||_F^2 for k = 0..f_max.
struct InversePowerTables {
  std::vector<double> sigma;
  std::vector<double> frob2;
};

InversePowerTables inverse_power_tables(const Matrix& a_inv, int k_max, int f_max) {
  InversePowerTables t;
  Matrix p = Matrix::Identity(a_inv.rows(), a_inv.cols());
  const int top = std::max(k_max, f_max);
  for (int k = 0; k <= top; ++k) {
    if (k > 0) p = a_inv * p;
    if (k <= k_max) t.sigma.push_back(spectral_norm(p));
    if (k <= f_max) t.frob2.push_back(p.squaredNorm());
  }
  return t;
}

std::pair<double, double> tu_sides_from(const InversePowerTables& t, int horizon, double delta,
                                        const TuConstants& k) {
  double tr_gamma_inv = 0.0;
  for (int i = 0; i <= horizon; ++i) tr_gamma_inv += t.frob2[i];
  double tail = 0.0;
  for (int i = horizon + 1; i <= 2 * horizon + 1; ++i) tail += t.frob2[i];
  const double s = t.sigma[(horizon + 1) / 2];
  const double big_t = static_cast<double>(horizon);
  const double lhs = 4.0 * big_t * big_t * s * s * tr_gamma_inv + big_t * tail / delta;
  const double rhs = k.phi_min * k.phi_min * k.psi_const * k.psi_const * delta * delta /
                     (2.0 * k.sigma_max_P * k.sigma_max_P);
  return {lhs, rhs};
}

double trace_p_gamma_inv_p(const Matrix& a_inv, const CMatrix& basis, int horizon) {
  const Matrix g = gramian(a_inv, horizon);
  return (basis * g.cast<Complex>() * basis.adjoint()).trace().real();
}

const char* rate_label(bool s0, bool s1, bool s2) {
  if (s0 && !s1 && !s2) return "T^-1/2";
  if (s0) return "T^-1/2 polylog";
  if (s1) return "T^-1 polylog";
  return "rho^-T";
}

}  // namespace

void BoundConstants::validate() const {
  if (!(C > 0.0) || !(c > 0.0) || !(R > 0.0) || !std::isfinite(C) || !std::isfinite(c) || !std::isfinite(R)) {
    throw InvalidArgument("bound constants C, c, R must be positive and finite");
  }
}

std::optional<KnownJordan> known_jordan(const SystemSpec& spec) {
  if (spec.jordan && spec.jordan_basis) return KnownJordan{*spec.jordan, *spec.jordan_basis};
  if (spec.dim() == 1) {
    return KnownJordan{JordanSpec::diagonal({spec.a(0, 0)}), CMatrix::Identity(1, 1)};
  }
  return std::nullopt;
}

double threshold_T_eta(int d, double delta, double C) {
  require_delta(delta, "T_eta");
  return C * (std::log(2.0 / delta) + d * std::log(5.0));
}

double threshold_T_s(int d, double log_trace, double delta, double C) {
  require_delta(delta, "T_s");
  return C * (d * softplus(log_trace) + 2.0 * d * std::log(5.0 / delta));
}

double c_A_delta(int d, double log_trace, double delta, int horizon, double C) {
  require_horizon(horizon, "c(A, delta)");
  return threshold_T_s(d, log_trace, 2.0 * delta / (3.0 * horizon), C);
}

double gamma_s(int d, double log_trace, double delta) {
  require_delta(delta, "gamma_s");
  return std::sqrt(8.0 * d * (std::log(5.0 / delta) + 0.5 * softplus(log_trace + std::log(4.0))));
}

double gamma_ms(int d, double log_trace, double delta, int horizon) {
  require_delta(delta, "gamma_ms");
  require_horizon(horizon, "gamma_ms");
  return std::sqrt(16.0 * d * softplus(log_trace) + 32.0 * d * std::log(15.0 * horizon / (2.0 * delta)));
}

Beta0Result solve_beta0(const Matrix& a, double delta, int horizon, const BoundConstants& constants, int k_cap) {
  require_square(a, "solve_beta0");
  require_delta(delta, "solve_beta0");
  require_horizon(horizon, "solve_beta0");
  constants.validate();
  const double smin_a = sigma_min(a);
  if (!(smin_a > 0.0)) throw InvalidArgument("solve_beta0: sigma_min(AA') must be positive");
  const int d = static_cast<int>(a.rows());
  const double c_val = c_A_delta(d, log_trace_gramian(a, horizon), delta, horizon, constants.C);
  Beta0Result res;
  res.target = 16.0 * std::numbers::e * c_val /
               (horizon * constants.R * constants.R * smin_a * smin_a);
  if (k_cap <= 0) k_cap = 4 * horizon + 16;

  // Largest k whose bracket (1/(k+1), 1/k] contains a feasible beta.
  int best_k = 0;
  double best_s = 0.0;
  bool truncated = false;
  Matrix g = Matrix::Identity(a.rows(), a.cols());
  Matrix p = Matrix::Identity(a.rows(), a.cols());
  for (int k = 1; k <= k_cap; ++k) {
    p = a * p;
    g.noalias() += p * p.transpose();
    if (!g.allFinite()) {
      truncated = true;
      break;
    }
    const double s = lambda_min_sym(g);
    if (s / (static_cast<double>(k) * k) >= res.target) {
      best_k = k;
      best_s = s;
    }
  }
  if (best_k == 0) {
    res.beta0 = 1.0;
    res.k = 1;
    res.at_boundary = true;
    return res;
  }
  const double lo = 1.0 / (best_k + 1.0);
  const double root = std::sqrt(res.target / best_s);
  res.beta0 = root > lo ? root : std::nextafter(lo, 1.0);
  res.k = best_k;
  res.at_boundary = truncated || best_k == k_cap;
  return res;
}

PsiEstimate estimate_psi(const Matrix& a, const CMatrix& basis, double delta, int n_samples, std::uint64_t seed) {
  require_square(a, "estimate_psi");
  require_delta(delta, "estimate_psi");
  if (n_samples < 2) throw InvalidArgument("estimate_psi: need at least two samples");
  const int d = static_cast<int>(a.rows());
  if (basis.rows() != d || basis.cols() != d) throw DimensionError("estimate_psi: basis shape mismatch");
  const SpectralReport rep = spectral_report(a, 1);
  if (!(rep.rho_min() > 1.0)) throw RegimeError("estimate_psi: A is not explosive (rho_min <= 1)");
  const Matrix a_inv = inverse_or_throw(a, "estimate_psi");

  PsiEstimate out;
  out.samples = n_samples;
  const double target = std::log(1e-12);
  int horizon = 1;
  while (log_sigma_max_power(a_inv, horizon) >= target) {
    horizon = horizon < 64 ? horizon + 1 : horizon * 2;
    if (horizon > (1 << 20)) throw NumericError("estimate_psi: A^{-T} decays too slowly");
  }
  out.internal_T = horizon;

  const std::vector<double> stats = parallel::map_trials<double>(static_cast<std::size_t>(n_samples), [&](std::size_t i) {
    Rng rng(derive_stream(seed, {i}));
    Vector z = Vector::Zero(d);
    Vector eta(d);
    for (int t = horizon; t >= 1; --t) {
      for (int j = 0; j < d; ++j) eta(j) = rng.normal();
      z = a_inv * (eta + z);
    }
    const CVector pz = basis * z.cast<Complex>();
    return pz.cwiseAbs().minCoeff();
  });
  out.psi_hat = quantile(stats, delta);

  constexpr int kBootstrap = 200;
  std::vector<double> boot(kBootstrap);
  std::vector<double> resample(stats.size());
  for (int b = 0; b < kBootstrap; ++b) {
    Rng rng(derive_stream(seed, {~0ULL, static_cast<std::uint64_t>(b)}));
    for (auto& v : resample) {
      const auto idx = static_cast<std::size_t>(rng.uniform() * static_cast<double>(stats.size()));
      v = stats[std::min(idx, stats.size() - 1)];
    }
    boot[b] = quantile(resample, delta);
  }
  out.std_err = sample_std(boot);
  return out;
}

std::pair<double, double> tu_sides(const Matrix& a, int horizon, double delta, const TuConstants& k) {
  require_square(a, "T_u");
  require_delta(delta, "T_u");
  require_horizon(horizon, "T_u");
  const Matrix a_inv = inverse_or_throw(a, "T_u");
  const InversePowerTables t = inverse_power_tables(a_inv, (horizon + 1) / 2, 2 * horizon + 1);
  return tu_sides_from(t, horizon, delta, k);
}

bool in_Tu(const Matrix& a, int horizon, double delta, const TuConstants& k) {
  const auto [lhs, rhs] = tu_sides(a, horizon, delta, k);
  return lhs <= rhs;
}

std::optional<int> scan_min_Tu(const Matrix& a, double delta, const TuConstants& k, int t_max) {
  require_square(a, "T_u scan");
  require_delta(delta, "T_u scan");
  require_horizon(t_max, "T_u scan");
  const Matrix a_inv = inverse_or_throw(a, "T_u scan");
  const InversePowerTables t = inverse_power_tables(a_inv, (t_max + 1) / 2, 2 * t_max + 1);
  std::optional<int> first;
  for (int horizon = t_max; horizon >= 1; --horizon) {
    const auto [lhs, rhs] = tu_sides_from(t, horizon, delta, k);
    if (!(lhs <= rhs)) break;
    first = horizon;
  }
  return first;
}

double gamma_A(const Matrix& a, const CMatrix& basis, double delta, int horizon, const OutboxPhi& phi,
               double psi_const, double c) {
  require_delta(delta, "gamma(A, delta)");
  const Matrix a_inv = inverse_or_throw(a, "gamma(A, delta)");
  const Vector sv = singular_values(a);
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double psi = psi_const * delta;
  const double lead = 4.0 * phi.phi_max * phi.phi_max * smax * smax /
                      (phi.phi_min * phi.phi_min * smin * smin * psi * psi);
  return lead * (1.0 + std::log(1.0 / delta) / c) * trace_p_gamma_inv_p(a_inv, basis, horizon);
}

double gamma_e(const Matrix& a, const CMatrix& basis, double delta, int horizon, const OutboxPhi& phi,
               double psi_const, double c) {
  const double g = gamma_A(a, basis, delta, horizon, phi, psi_const, c);
  const double d = static_cast<double>(a.rows());
  const double smax_p = Eigen::JacobiSVD<CMatrix>(basis).singularValues()(0);
  return std::sqrt(d) * smax_p / (phi.phi_min * psi_const * delta) *
         std::sqrt(std::log(2.0 / delta) + 2.0 * std::log(5.0) + std::log1p(g));
}

NotationTable notation_quantities(const Matrix& a, const std::optional<KnownJordan>& jordan, double delta,
                                  int horizon, const BoundConstants& constants, const BoundOptions& options) {
  require_square(a, "notation_quantities");
  require_finite(a, "notation_quantities");
  require_delta(delta, "notation_quantities");
  require_horizon(horizon, "notation_quantities");
  constants.validate();

  NotationTable t;
  t.d = static_cast<int>(a.rows());
  t.horizon = horizon;
  t.delta = delta;
  t.constants = constants;
  t.log_trace_gramian = log_trace_gramian(a, horizon);
  t.T_eta = threshold_T_eta(t.d, delta, constants.C);
  t.T_s = threshold_T_s(t.d, t.log_trace_gramian, delta, constants.C);
  t.c_A_delta = c_A_delta(t.d, t.log_trace_gramian, delta, horizon, constants.C);
  t.gamma_s = gamma_s(t.d, t.log_trace_gramian, delta);
  t.gamma_ms = gamma_ms(t.d, t.log_trace_gramian, delta, horizon);
  const double smin_a = sigma_min(a);
  t.T_ms = smin_a > 0.0 ? constants.C * t.c_A_delta / (smin_a * smin_a) : std::numeric_limits<double>::infinity();
  if (smin_a > 0.0) t.beta0 = solve_beta0(a, delta, horizon, constants);

  if (jordan) {
    if (jordan->basis.rows() != t.d || jordan->basis.cols() != t.d) {
      throw DimensionError("notation_quantities: Jordan basis shape mismatch");
    }
    const SpectralReport rep = spectral_report(a, horizon, constants.C);
    if (rep.rho_min() > 1.0) {
      t.psi = estimate_psi(a, jordan->basis, delta, options.psi_samples, options.psi_seed);
      t.psi_const = t.psi->psi_hat / delta;
      t.phi = outbox_phi(jordan->spec, horizon, options.outbox_grid);
      t.sigma_max_P = Eigen::JacobiSVD<CMatrix>(jordan->basis).singularValues()(0);
      if (t.phi->phi_min > 0.0 && *t.psi_const > 0.0) {
        t.gamma_A_delta = gamma_A(a, jordan->basis, delta, horizon, *t.phi, *t.psi_const, constants.c);
        t.gamma_e = gamma_e(a, jordan->basis, delta, horizon, *t.phi, *t.psi_const, constants.c);
        t.in_Tu = in_Tu(a, horizon, delta, TuConstants{t.phi->phi_min, *t.psi_const, *t.sigma_max_P});
      }
    }
  }
  return t;
}

BoundReport regime_error_bound(const Matrix& a, const std::optional<KnownJordan>& jordan_in, double delta,
                               int horizon, const BoundConstants& constants, const BoundOptions& options) {
  require_square(a, "regime_error_bound");
  require_finite(a, "regime_error_bound");
  require_delta(delta, "regime_error_bound");
  require_horizon(horizon, "regime_error_bound");
  constants.validate();
  const int d = static_cast<int>(a.rows());
  const SpectralReport rep = spectral_report(a, horizon, constants.C);
  const bool s0 = rep.has(RegimeClass::S0);
  const bool s1 = rep.has(RegimeClass::S1);
  const bool s2 = rep.has(RegimeClass::S2);
  if (!rep.regular) {
    throw RegimeError(
        "regime_error_bound: A is irregular (an explosive eigenvalue has geometric multiplicity > 1); "
        "OLS is inconsistent for such systems and no error bound applies");
  }
  std::optional<KnownJordan> jordan = jordan_in;
  if (!jordan && d == 1) jordan = KnownJordan{JordanSpec::diagonal({a(0, 0)}), CMatrix::Identity(1, 1)};

  BoundReport out;
  for (RegimeClass c : {RegimeClass::S0, RegimeClass::S1, RegimeClass::S2}) {
    if (rep.has(c)) out.classes.push_back(c);
  }
  out.rate = rate_label(s0, s1, s2);

  if (s2 && !s0 && !s1 && !jordan) {
    throw InvalidArgument("regime_error_bound: the explosive bound needs the Jordan basis of A (supply a Jordan spec)");
  }
  out.table = notation_quantities(a, s2 && !s0 && !s1 ? jordan : std::nullopt, delta, horizon, constants, options);
  const NotationTable& tab = out.table;
  const double big_t = static_cast<double>(horizon);

  if (!s2) {
    // S0 u S1 bound at delta / 4.
    const double g = gamma_s(d, tab.log_trace_gramian, delta / 4.0);
    out.stable_union_bound = std::sqrt(constants.C / big_t) * g;
    const bool union_ok = big_t >= std::max(threshold_T_eta(d, delta / 4.0, constants.C),
                                            threshold_T_s(d, tab.log_trace_gramian, delta / 4.0, constants.C));
    if (s1 && !s0) {
      if (!tab.beta0) {
        out.assumptions_violated.push_back("A is singular: sigma_min(AA') = 0");
      } else {
        const Matrix a_inv = inverse_or_throw(a, "regime_error_bound");
        const double gm = gamma_ms(d, tab.log_trace_gramian, delta / 2.0, horizon);
        const double smin_gamma = lambda_min_sym(gramian(a, tab.beta0->k));
        out.error_upper_bound = constants.C * spectral_norm(a_inv) / std::sqrt(big_t * smin_gamma) * gm * gm;
        const double d3t = delta / (3.0 * big_t);
        const double smin_a = sigma_min(a);
        const double t_ms_half =
            constants.C * c_A_delta(d, tab.log_trace_gramian, delta / 2.0, horizon, constants.C) / (smin_a * smin_a);
        out.min_T_ok = big_t >= std::max({2.0 * threshold_T_eta(d, d3t, constants.C),
                                          2.0 * threshold_T_s(d, tab.log_trace_gramian, d3t, constants.C), t_ms_half});
        if (tab.beta0->at_boundary) out.assumptions_violated.push_back("beta0 at search boundary");
      }
      if (!out.min_T_ok) out.assumptions_violated.push_back("T below the marginal-regime sample-size threshold");
    } else {
      out.error_upper_bound = out.stable_union_bound;
      out.min_T_ok = union_ok;
      if (!union_ok) out.assumptions_violated.push_back("T below max(T_eta(delta/4), T_s(delta/4))");
    }
  } else if (!s0 && !s1) {
    const Matrix a_inv = inverse_or_throw(a, "regime_error_bound");
    const double delta5 = delta / 5.0;
    const NotationTable t5 = notation_quantities(a, jordan, delta5, horizon, constants, options);
    if (!t5.gamma_e || !tab.psi_const) {
      out.assumptions_violated.push_back("anti-concentration or outbox constant is zero");
    } else {
      // psi(A) is the linear constant estimated at the requested delta.
      const double ge = gamma_e(a, jordan->basis, delta5, horizon, *t5.phi, *tab.psi_const, constants.c);
      const double log_bound = std::log(constants.C) + log_sigma_max_power(a_inv, horizon) + std::log(ge);
      out.error_upper_bound = std::exp(log_bound);
      out.min_T_ok = in_Tu(a, horizon, delta5, TuConstants{t5.phi->phi_min, *tab.psi_const, *tab.sigma_max_P});
      if (!out.min_T_ok) out.assumptions_violated.push_back("T not in T_u(delta/5)");
    }
  } else {
    out.assumptions_violated.push_back("mixed regimes: only the rate class is available");
    if (!jordan) {
      out.assumptions_violated.push_back("per-block bounds need a Jordan structure");
    } else {
      for (RegimeClass cls : out.classes) {
        JordanSpec part;
        for (const JordanBlock& b : jordan->spec.blocks) {
          if (classify_modulus(std::abs(b.eigenvalue), horizon, constants.C) == cls) part.blocks.push_back(b);
        }
        const RealJordanForm rf = realize(part);
        BlockBound bb;
        bb.regime = cls;
        bb.size = part.dimension();
        const BoundReport sub =
            regime_error_bound(rf.a, KnownJordan{part, rf.basis}, delta, horizon, constants, options);
        bb.bound = sub.error_upper_bound;
        bb.min_T_ok = sub.min_T_ok;
        out.per_block.push_back(bb);
      }
      out.min_T_ok = std::all_of(out.per_block.begin(), out.per_block.end(),
                                 [](const BlockBound& b) { return b.min_T_ok; });
    }
  }
  return out;
}

LowerBound1d minimax_lower_bound_1d(double a, double delta, int horizon, double C) {
  if (!(a >= 1.1)) throw InvalidArgument("minimax_lower_bound_1d: requires a >= 1.1");
  require_delta(delta, "minimax_lower_bound_1d");
  require_horizon(horizon, "minimax_lower_bound_1d");
  if (!(C > 0.0)) throw InvalidArgument("minimax_lower_bound_1d: C must be positive");
  const double big_t = static_cast<double>(horizon);
  const double log_a = std::log(a);
  const double log_lhs = std::log(C) + 2.0 * log_a + 2.0 * std::log(big_t) - big_t * log_a;
  const double shrink = 1.0 - 1.0 / (a * a);
  const double log_delta = std::log(delta);
  LowerBound1d out;
  if (log_lhs > 2.0 * log_delta) {
    out.branch = 1;
    out.value = C * shrink * delta / (-(a * a) * log_delta * log_delta * log_delta);
  } else {
    out.branch = 2;
    out.value = std::exp(std::log(C * shrink / (-delta * log_delta)) - big_t * log_a);
  }
  return out;
}

}  // namespace sysid
