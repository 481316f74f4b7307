#pragma once

#include <array>
#include <complex>
#include <limits>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace sysid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

inline constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

/// Throws InvalidArgument naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what);
void require_square(const Matrix& m, std::string_view what);

double spectral_norm(const Matrix& m);
/// Smallest singular value (0 for an empty or rank-deficient matrix).
double sigma_min(const Matrix& m);
Vector singular_values(const Matrix& m);

Matrix matrix_power(const Matrix& a, int k);

/// log sigma_max(A^k), computed with running renormalization so that it stays
/// finite when A^k itself would overflow or underflow.
double log_sigma_max_power(const Matrix& a, int k);

// ---------------------------------------------------------------------------
// Jordan structure

struct JordanBlock {
  Complex eigenvalue;
  int size = 1;

  friend bool operator==(const JordanBlock&, const JordanBlock&) = default;
};

/// A list of Jordan blocks J_k(lambda). Systems are built from this so their
/// structure is known by construction; no Jordan decomposition is ever
/// computed numerically.
struct JordanSpec {
  std::vector<JordanBlock> blocks;

  int dimension() const;
  /// Eigenvalues repeated by algebraic multiplicity, in block order.
  std::vector<Complex> eigenvalues() const;
  /// Block-diagonal complex Jordan matrix Lambda.
  CMatrix lambda() const;
  /// Throws InvalidArgument if a block has size < 1, or (when `real_target`)
  /// a non-real eigenvalue block lacks a conjugate partner of equal size.
  void validate(bool real_target) const;

  static JordanSpec diagonal(const std::vector<double>& eigenvalues);
  static JordanSpec single(double eigenvalue, int size);

  friend bool operator==(const JordanSpec&, const JordanSpec&) = default;
};

/// Real matrix A with a Jordan basis P such that A = P^{-1} Lambda P, where
/// Lambda = spec.lambda(). Conjugate pairs become real rotation-scaling blocks.
struct RealJordanForm {
  Matrix a;
  CMatrix basis;
};

RealJordanForm realize(const JordanSpec& spec);

/// J_d(lambda): lambda on the diagonal, ones on the first superdiagonal.
CMatrix jordan_block(Complex lambda, int d);
Matrix jordan_block(double lambda, int d);

// ---------------------------------------------------------------------------
// Gramian

/// Gamma_t(A) = sum_{k=0}^t A^k A^k'.
Matrix gramian(const Matrix& a, int t);

/// log tr Gamma_t(A), evaluated with renormalized powers and log-sum-exp so
/// explosive A at large t does not overflow.
double log_trace_gramian(const Matrix& a, int t);

// ---------------------------------------------------------------------------
// Regime classification

enum class RegimeClass { S0, S1, S2 };

std::string_view to_string(RegimeClass c);

/// S0 iff rho <= 1 - C/T, S1 iff 1 - C/T < rho <= 1 + C/T, S2 otherwise.
RegimeClass classify_modulus(double rho, int horizon, double boundary_c);

struct SpectralReport {
  std::vector<Complex> eigenvalues;  // sorted by modulus, descending
  std::vector<double> moduli;        // rho_1 >= ... >= rho_d
  std::vector<RegimeClass> per_eigenvalue_class;
  std::array<bool, 3> present{};     // indexed by RegimeClass
  bool regular = true;
  int horizon_T = 1;
  double boundary_C = 1.0;

  bool has(RegimeClass c) const { return present[static_cast<int>(c)]; }
  /// True when every eigenvalue falls in class `c`.
  bool only(RegimeClass c) const;
  double rho_max() const { return moduli.front(); }
  double rho_min() const { return moduli.back(); }
};

/// Eigenvalue moduli, per-eigenvalue class and regularity. Regularity means
/// every eigenvalue with |lambda| > 1 + tol has geometric multiplicity one,
/// tested as rank(A - lambda I) = d - 1 with absolute tolerance tol * ||A||.
SpectralReport spectral_report(const Matrix& a, int horizon, double boundary_c = 1.0,
                               double rel_tol = 1e-8);

bool is_regular(const Matrix& a, double rel_tol = 1e-8);

// ---------------------------------------------------------------------------

/// Moore-Penrose pseudo-inverse; singular values below
/// rel_tol * sigma_max * max(rows, cols) are treated as zero.
Matrix pseudo_inverse(const Matrix& m, double rel_tol = kMachineEps);

struct OutboxPhi {
  double phi_min = 0.0;
  double phi_max = 0.0;
  int grid_density = 0;
  long evaluations_min = 0;
  long evaluations_max = 0;
};

/// phi_min / phi_max of the outbox definition, computed by grid search:
/// phi_min over sign patterns and magnitudes on the boundary min_i |v_i| = 1
/// of the 1-outbox, phi_max over directions of the unit sphere. The grid
/// makes phi_min an upper-biased and phi_max a lower-biased estimate.
OutboxPhi outbox_phi(const JordanSpec& spec, int horizon, int grid_density = 64);

/// Objective sigma(sum_{i=1}^T Lambda^{-i+1} v v' Lambda^{-i+1}*) for one v:
/// returns {sigma_min, sigma_max}.
std::pair<double, double> outbox_objective(const CMatrix& lambda_inv, const Vector& v,
                                           int horizon);

struct GramianRatioCheck {
  double lambda1 = 0.0;  // largest eigenvalue of Gamma_{t1} Gamma_{t2}^{-1}
  double bound = 0.0;    // kappa(P)^2 d beta^{d^2}, beta = t1 / t2
  bool poly_bound_ok = false;
};

/// Requires t1 > t2 >= 8d.
GramianRatioCheck gramian_ratio_bound_check(const Matrix& a, int t1, int t2);

}  // namespace sysid
