#pragma once

#include <optional>
#include <vector>

#include "sysid/lti_sim.hpp"
#include "sysid/matrix_core.hpp"

namespace sysid {

/// Result of regressing X_{t+1} on X_t (and U_t when inputs are present)
/// over the T pairs t = 0..T-1.
struct EstimateReport {
  Matrix a_hat;
  std::optional<Matrix> b_hat;
  /// ||A - A_hat||_2 when the true A was supplied.
  std::optional<double> error_opnorm;
  /// ||[A B] - [A_hat B_hat]||_2 when true A and B were supplied.
  std::optional<double> joint_error_opnorm;
  /// Singular values of Y_T, descending.
  std::vector<double> yt_spectrum;
  Matrix yt;
  /// Empty when the trajectory carries no noise record.
  Matrix st;
  bool rank_deficient = false;
};

/// Y_T = sum_t Z_t Z_t' and S_T = sum_t Z_t eta_{t+1}' over t = 0..T-1, where
/// Z_t = X_t, or (X_t, U_t) stacked when the trajectory carries inputs.
struct CovarianceMartingale {
  Matrix yt;
  Matrix st;
};

struct CovarianceDiagnostics {
  Matrix ut;
  Matrix ft;
  double gap_opnorm = 0.0;
  /// Only for unscaled trajectories, where Y_T is representable.
  std::optional<double> lambda_min_yt;
  std::optional<double> selfnorm_value;
};

/// Least squares via the pseudo-inverse of the data matrix (equal to
/// Y_T^+ X' X_shift). Rank deficiency uses the same rel_tol cutoff.
EstimateReport ols_estimate(const Trajectory& traj, const std::optional<Matrix>& true_a = std::nullopt,
                            double rel_tol = kMachineEps,
                            const std::optional<Matrix>& true_b = std::nullopt);

CovarianceMartingale covariance_and_martingale(const Trajectory& traj);

/// Symmetric inverse square root with eigenvalues floored at
/// floor_rel * lambda_max.
Matrix sym_inverse_sqrt(const Matrix& m, double floor_rel = 1e-14);

/// ||(Y_T + V)^{-1/2} S_T||_2; V must be symmetric positive definite.
double selfnorm_statistic(const Matrix& yt, const Matrix& st, const Matrix& v);

/// U_T = sum_{t=1}^T A^{-(T-t)} z_t z_t' A^{-(T-t)'} (= A^{-T} sum x_t x_t' A^{-T'})
/// and F_T = sum_{t=0}^{T-1} A^{-t} z_T z_T' A^{-t'}, built from z_t.
CovarianceDiagnostics explosive_pair(const Trajectory& traj, const Matrix& a);

/// ||A - A_hat||_2.
double estimation_error(const Matrix& a_hat, const Matrix& a);

/// OLS error ||A - A_hat||_2 computed from a scaled trajectory without forming
/// x_t: with N = A^{-(T-1)}, (A_hat - A)' = N' Utilde^+ Stilde where Utilde
/// and Stilde are the N-normalized covariance and cross term.
double ols_error_scaled(const Trajectory& scaled, const Matrix& a, double rel_tol = kMachineEps);

}  // namespace sysid
