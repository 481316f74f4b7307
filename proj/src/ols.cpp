#include "sysid/ols.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "sysid/error.hpp"

namespace sysid {

namespace {

// T x (d+p) regressor matrix with rows Z_t' for t = 0..T-1.
Matrix regressors(const Trajectory& traj) {
  const int horizon = static_cast<int>(traj.states.rows()) - 1;
  const int d = traj.dim();
  const int p = traj.inputs ? static_cast<int>(traj.inputs->cols()) : 0;
  Matrix z(horizon, d + p);
  z.leftCols(d) = traj.states.topRows(horizon);
  if (p > 0) z.rightCols(p) = *traj.inputs;
  return z;
}

void require_unscaled(const Trajectory& traj, const char* what) {
  if (traj.scaled) throw InvalidArgument(std::string(what) + ": trajectory is scaled; convert or use the scaled pipeline");
  const auto steps = traj.states.rows() - 1;
  const bool noise_ok = traj.noises.rows() == steps || traj.noises.size() == 0;
  const bool input_ok = !traj.inputs || traj.inputs->rows() == steps;
  if (steps < 1 || !noise_ok || !input_ok) {
    throw InvalidArgument(std::string(what) + ": empty or malformed trajectory");
  }
}

Matrix inverse_checked(const Matrix& a, const char* what) {
  require_square(a, what);
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) throw NumericError(std::string(what) + ": A is singular");
  return lu.inverse();
}

// U_T - F_T = sum_{k=0}^{T-1} A^{-k} (z_{T-k} z_{T-k}' - z_T z_T') A^{-k}'. With
// D_k = z_T - z_{T-k} the bracket is D_k D_k' - z_T D_k' - D_k z_T'. When the
// increments of z are known (no inputs), D_k is accumulated from
// A^{-t} eta_t so the difference never cancels catastrophically.
Matrix accurate_gap(const Matrix& zs, const Trajectory& traj, const Matrix& a_inv) {
  const int horizon = traj.horizon();
  const int d = traj.dim();
  const bool from_noise = !traj.inputs && traj.noises.rows() == horizon && traj.noises.cols() == d;
  std::vector<Matrix> inv_pow;
  if (from_noise) {
    inv_pow.reserve(static_cast<std::size_t>(horizon) + 1);
    inv_pow.push_back(Matrix::Identity(d, d));
    for (int t = 1; t <= horizon; ++t) inv_pow.push_back(a_inv * inv_pow.back());
  }
  const Vector z_end = zs.row(horizon).transpose();
  Vector delta = Vector::Zero(d);
  Matrix gap = Matrix::Zero(d, d);
  std::vector<Vector> deltas(static_cast<std::size_t>(horizon));
  for (int k = 0; k < horizon; ++k) {
    if (k > 0) {
      const int t = horizon - k + 1;  // z_{T-k+1} - z_{T-k} = A^{-t}(eta_t + B U_{t-1})
      if (from_noise) {
        delta += inv_pow[t] * traj.noises.row(t - 1).transpose();
      } else {
        delta = z_end - zs.row(horizon - k).transpose();
      }
    }
    deltas[k] = delta;
  }
  // Horner from k = T-1 down to 0.
  for (int k = horizon - 1; k >= 0; --k) {
    gap = a_inv * gap * a_inv.transpose();
    const Vector& dk = deltas[k];
    gap.noalias() += dk * dk.transpose() - z_end * dk.transpose() - dk * z_end.transpose();
  }
  return gap;
}

}  // namespace

EstimateReport ols_estimate(const Trajectory& traj, const std::optional<Matrix>& true_a, double rel_tol,
                            const std::optional<Matrix>& true_b) {
  require_unscaled(traj, "ols_estimate");
  const int horizon = static_cast<int>(traj.states.rows()) - 1;
  const int d = traj.dim();
  const Matrix z = regressors(traj);
  const Matrix next = traj.states.bottomRows(horizon);
  if (!z.allFinite() || !next.allFinite()) throw NumericError("ols_estimate: trajectory has non-finite states");

  EstimateReport rep;
  const Matrix theta = (pseudo_inverse(z, rel_tol) * next).transpose();
  rep.a_hat = theta.leftCols(d);
  if (traj.inputs) rep.b_hat = theta.rightCols(theta.cols() - d);

  const Vector sv = singular_values(z);
  for (Eigen::Index i = 0; i < sv.size(); ++i) rep.yt_spectrum.push_back(sv(i) * sv(i));
  const double cutoff = rel_tol * sv(0) * static_cast<double>(std::max(z.rows(), z.cols()));
  rep.rank_deficient = sv.size() < z.cols() || !(sv(sv.size() - 1) > cutoff);

  rep.yt = z.transpose() * z;
  if (traj.noises.rows() == horizon && traj.noises.cols() == d) rep.st = z.transpose() * traj.noises;

  if (true_a) {
    if (true_a->rows() != d || true_a->cols() != d) throw DimensionError("ols_estimate: true A shape mismatch");
    rep.error_opnorm = estimation_error(rep.a_hat, *true_a);
    if (true_b && rep.b_hat) {
      if (true_b->rows() != d || true_b->cols() != rep.b_hat->cols()) {
        throw DimensionError("ols_estimate: true B shape mismatch");
      }
      Matrix truth(d, theta.cols());
      truth << *true_a, *true_b;
      rep.joint_error_opnorm = spectral_norm(truth - theta);
    }
  }
  return rep;
}

CovarianceMartingale covariance_and_martingale(const Trajectory& traj) {
  require_unscaled(traj, "covariance_and_martingale");
  if (traj.noises.rows() != traj.horizon() || traj.noises.cols() != traj.dim() || traj.horizon() < 1) {
    throw InvalidArgument("covariance_and_martingale: trajectory has no noise record");
  }
  const Matrix z = regressors(traj);
  CovarianceMartingale out;
  out.yt = Matrix::Zero(z.cols(), z.cols());
  out.st = Matrix::Zero(z.cols(), traj.dim());
  for (int t = 0; t < traj.horizon(); ++t) {
    out.yt.noalias() += z.row(t).transpose() * z.row(t);
    out.st.noalias() += z.row(t).transpose() * traj.noises.row(t);
  }
  return out;
}

Matrix sym_inverse_sqrt(const Matrix& m, double floor_rel) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw NumericError("sym_inverse_sqrt: eigen solve failed");
  Vector ev = es.eigenvalues();
  const double floor = floor_rel * std::max(ev.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = 1.0 / std::sqrt(std::max(ev(i), floor));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double selfnorm_statistic(const Matrix& yt, const Matrix& st, const Matrix& v) {
  require_square(yt, "selfnorm_statistic Y_T");
  require_square(v, "selfnorm_statistic V");
  if (v.rows() != yt.rows() || st.rows() != yt.rows()) throw DimensionError("selfnorm_statistic: shape mismatch");
  const double scale = std::max(v.cwiseAbs().maxCoeff(), 1e-300);
  if ((v - v.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("selfnorm_statistic: V must be symmetric");
  }
  Eigen::LLT<Matrix> llt(v);
  if (llt.info() != Eigen::Success) throw InvalidArgument("selfnorm_statistic: V must be positive definite");
  return spectral_norm(sym_inverse_sqrt(yt + v) * st);
}

CovarianceDiagnostics explosive_pair(const Trajectory& traj, const Matrix& a) {
  require_square(a, "explosive_pair");
  const int horizon = traj.horizon();
  const int d = traj.dim();
  if (horizon < 1) throw InvalidArgument("explosive_pair: empty trajectory");
  if (a.rows() != d) throw DimensionError("explosive_pair: A does not match the trajectory");
  const Matrix a_inv = inverse_checked(a, "explosive_pair");

  Matrix zs(horizon + 1, d);
  if (traj.scaled) {
    zs = traj.states;
  } else {
    Matrix pow = Matrix::Identity(d, d);
    for (int t = 0; t <= horizon; ++t) {
      zs.row(t) = (pow * traj.states.row(t).transpose()).transpose();
      pow = a_inv * pow;
    }
  }

  CovarianceDiagnostics out;
  out.ut = Matrix::Zero(d, d);
  for (int t = 1; t <= horizon; ++t) {
    out.ut = a_inv * out.ut * a_inv.transpose();
    out.ut.noalias() += zs.row(t).transpose() * zs.row(t);
  }
  const Matrix zz = zs.row(horizon).transpose() * zs.row(horizon);
  out.ft = Matrix::Zero(d, d);
  for (int t = 0; t < horizon; ++t) {
    out.ft = a_inv * out.ft * a_inv.transpose();
    out.ft += zz;
  }
  out.gap_opnorm = spectral_norm(accurate_gap(zs, traj, a_inv));

  if (!traj.scaled && traj.states.allFinite()) {
    const CovarianceMartingale cm = covariance_and_martingale(traj);
    if (cm.yt.allFinite()) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(cm.yt, Eigen::EigenvaluesOnly);
      out.lambda_min_yt = es.eigenvalues()(0);
      out.selfnorm_value = selfnorm_statistic(cm.yt, cm.st, Matrix::Identity(cm.yt.rows(), cm.yt.cols()));
    }
  }
  return out;
}

double estimation_error(const Matrix& a_hat, const Matrix& a) {
  if (a_hat.rows() != a.rows() || a_hat.cols() != a.cols()) {
    throw DimensionError("estimation_error: shape mismatch");
  }
  return spectral_norm(a - a_hat);
}

double ols_error_scaled(const Trajectory& scaled, const Matrix& a, double rel_tol) {
  if (!scaled.scaled) throw InvalidArgument("ols_error_scaled: trajectory is not scaled");
  if (scaled.inputs) throw InvalidArgument("ols_error_scaled: control inputs are not supported");
  const int horizon = scaled.horizon();
  const int d = scaled.dim();
  if (horizon < 1) throw InvalidArgument("ols_error_scaled: empty trajectory");
  const Matrix a_inv = inverse_checked(a, "ols_error_scaled");

  Matrix u = Matrix::Zero(d, d);
  Matrix s = Matrix::Zero(d, d);
  for (int t = 0; t < horizon; ++t) {
    u = a_inv * u * a_inv.transpose();
    s = a_inv * s;
    u.noalias() += scaled.states.row(t).transpose() * scaled.states.row(t);
    s.noalias() += scaled.states.row(t).transpose() * scaled.noises.row(t);
  }
  Matrix n_t = Matrix::Identity(d, d);
  for (int t = 0; t < horizon - 1; ++t) n_t = n_t * a_inv.transpose();
  const Matrix err_t = n_t * pseudo_inverse(u, rel_tol) * s;
  return spectral_norm(err_t);
}

}  // namespace sysid
