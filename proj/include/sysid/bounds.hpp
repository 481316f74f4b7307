#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sysid/lti_sim.hpp"
#include "sysid/matrix_core.hpp"

namespace sysid {

/// Universal constants left unspecified by the theory, plus the noise floor R.
struct BoundConstants {
  double C = 1.0;
  double c = 1.0;
  double R = 1.0;

  void validate() const;
  friend bool operator==(const BoundConstants&, const BoundConstants&) = default;
};

/// Jordan structure and basis P with A = P^{-1} Lambda P.
struct KnownJordan {
  JordanSpec spec;
  CMatrix basis;
};

/// Taken from the system's recorded Jordan data; d = 1 always has one.
std::optional<KnownJordan> known_jordan(const SystemSpec& spec);

struct BoundOptions {
  int psi_samples = 4000;
  std::uint64_t psi_seed = 0x7073692d73656564ULL;
  int outbox_grid = 64;

  friend bool operator==(const BoundOptions&, const BoundOptions&) = default;
};

// Table quantities that depend on A only through d and log tr Gamma_T(A).

double threshold_T_eta(int d, double delta, double C);
double threshold_T_s(int d, double log_trace, double delta, double C);
/// c(A, delta) = T_s(2 delta / (3T)).
double c_A_delta(int d, double log_trace, double delta, int horizon, double C);
double gamma_s(int d, double log_trace, double delta);
double gamma_ms(int d, double log_trace, double delta, int horizon);

struct Beta0Result {
  double beta0 = 1.0;
  /// floor(1 / beta0).
  int k = 1;
  /// 16 e c(A, delta) / (T R^2 sigma_min(AA')).
  double target = 0.0;
  /// True when no beta in (0, 1] satisfies the inequality (beta0 = 1 reported)
  /// or the scan hit its cap (beta0 is then an upper estimate).
  bool at_boundary = false;
};

/// Smallest beta in (0, 1] with beta^2 sigma_min(Gamma_{floor(1/beta)}(A)) >= target.
/// On each bracket (1/(k+1), 1/k] the floor is constant, so the left-most
/// feasible bracket is found by scanning k and the root inside it solved in
/// closed form. `k_cap` = 0 picks 4T + 16.
Beta0Result solve_beta0(const Matrix& a, double delta, int horizon, const BoundConstants& constants,
                        int k_cap = 0);

struct PsiEstimate {
  double psi_hat = 0.0;
  double std_err = 0.0;
  int samples = 0;
  /// Horizon used for z_T, chosen so that ||A^{-T}|| < 1e-12.
  int internal_T = 0;
};

/// delta-quantile of min_i |(P z_T)_i| over Monte Carlo draws of
/// z_T = sum_t A^{-t} eta_t; bootstrap standard error. Requires rho_min > 1.
PsiEstimate estimate_psi(const Matrix& a, const CMatrix& basis, double delta, int n_samples,
                         std::uint64_t seed);

struct NotationTable {
  int d = 0;
  int horizon = 0;
  double delta = 0.0;
  BoundConstants constants;

  double log_trace_gramian = 0.0;
  double T_eta = 0.0;
  double T_s = 0.0;
  double c_A_delta = 0.0;
  double T_ms = 0.0;
  double gamma_s = 0.0;
  double gamma_ms = 0.0;
  /// Absent when A is singular.
  std::optional<Beta0Result> beta0;

  // Explosive quantities, available only with a known Jordan basis and
  // rho_min > 1.
  std::optional<PsiEstimate> psi;
  /// psi(A) = psi_hat / delta, the linear anti-concentration constant.
  std::optional<double> psi_const;
  std::optional<OutboxPhi> phi;
  std::optional<double> sigma_max_P;
  std::optional<double> gamma_A_delta;
  std::optional<double> gamma_e;
  std::optional<bool> in_Tu;
};

NotationTable notation_quantities(const Matrix& a, const std::optional<KnownJordan>& jordan, double delta,
                                  int horizon, const BoundConstants& constants = {},
                                  const BoundOptions& options = {});

/// Constants of the T_u predicate that do not depend on T or delta.
struct TuConstants {
  double phi_min = 0.0;
  double psi_const = 0.0;
  double sigma_max_P = 0.0;
};

/// LHS and RHS of the T_u(delta) membership inequality; rhs uses psi(A) delta.
std::pair<double, double> tu_sides(const Matrix& a, int horizon, double delta, const TuConstants& k);
bool in_Tu(const Matrix& a, int horizon, double delta, const TuConstants& k);
/// Smallest T in [1, t_max] after which membership holds up to t_max
/// (membership below it may flicker); nullopt when T = t_max is not a member.
std::optional<int> scan_min_Tu(const Matrix& a, double delta, const TuConstants& k, int t_max);

/// gamma(A, delta) and gamma_e(A, delta) with psi(A) delta as the
/// anti-concentration level.
double gamma_A(const Matrix& a, const CMatrix& basis, double delta, int horizon, const OutboxPhi& phi,
               double psi_const, double c);
double gamma_e(const Matrix& a, const CMatrix& basis, double delta, int horizon, const OutboxPhi& phi,
               double psi_const, double c);

struct BlockBound {
  RegimeClass regime = RegimeClass::S0;
  int size = 0;
  std::optional<double> bound;
  bool min_T_ok = false;
};

struct BoundReport {
  std::vector<RegimeClass> classes;  // regimes present, in S0, S1, S2 order
  /// "T^-1/2", "T^-1 polylog", "rho^-T", "T^-1/2 polylog" (mixed with S0) or
  /// "T^-1 polylog" (S1 with S2).
  std::string rate;
  /// Numeric bound for pure regimes and S0/S1 mixtures.
  std::optional<double> error_upper_bound;
  /// The S0 u S1 bound, also reported for pure S1.
  std::optional<double> stable_union_bound;
  bool min_T_ok = false;
  std::vector<std::string> assumptions_violated;
  std::vector<BlockBound> per_block;
  NotationTable table;
};

/// Finite-time bound on ||A - A_hat||. Irregular explosive A is
/// refused with RegimeError; an explosive d > 1 system needs its Jordan basis.
BoundReport regime_error_bound(const Matrix& a, const std::optional<KnownJordan>& jordan, double delta,
                               int horizon, const BoundConstants& constants = {},
                               const BoundOptions& options = {});

struct LowerBound1d {
  double value = 0.0;
  int branch = 1;
};

/// Minimax lower bound for scalar a >= 1.1. Branch 1 when C a^2 T^2 a^{-T} > delta^2.
LowerBound1d minimax_lower_bound_1d(double a, double delta, int horizon, double C = 1.0);

}  // namespace sysid
