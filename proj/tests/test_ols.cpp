#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "sysid/error.hpp"
#include "sysid/lti_sim.hpp"
#include "sysid/ols.hpp"

using namespace sysid;

namespace {

Matrix scalar(double a) { return Matrix::Constant(1, 1, a); }

Matrix random_matrix(int r, int c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  }
  return m;
}

Matrix random_spd(int d, std::uint64_t seed) {
  const Matrix g = random_matrix(d, d, seed);
  return g * g.transpose() + 0.1 * Matrix::Identity(d, d);
}

// (X'X) theta' = X' X_next by Cholesky, independent of the pseudo-inverse path.
Matrix normal_equations(const Trajectory& tr) {
  const int horizon = tr.horizon();
  const Matrix x = tr.states.topRows(horizon);
  const Matrix next = tr.states.bottomRows(horizon);
  return (x.transpose() * x).ldlt().solve(x.transpose() * next).transpose();
}

}  // namespace

// Oracles

TEST(OlsEstimate, NoiselessScalarIsExact) {
  SystemSpec spec = SystemSpec::from_matrix(scalar(0.9));
  spec.x0 = Vector::Ones(1);
  const Trajectory tr = simulate(spec, NoiseModel::zero(), 10, 0);
  const EstimateReport r = ols_estimate(tr, spec.a);
  EXPECT_NEAR(r.a_hat(0, 0), 0.9, 1e-14);
  EXPECT_NEAR(*r.error_opnorm, 0.0, 1e-14);
  EXPECT_FALSE(r.rank_deficient);
}

TEST(OlsEstimate, MatchesNormalEquationsOnStableSystem) {
  const SystemSpec spec = SystemSpec::from_matrix(random_matrix_with_radius(3, 0.8, 5));
  const Trajectory tr = simulate(spec, NoiseModel::gaussian(), 500, 17);
  const EstimateReport r = ols_estimate(tr, spec.a);
  EXPECT_LE((r.a_hat - normal_equations(tr)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(OlsEstimate, ZeroTrajectoryIsRankDeficient) {
  const SystemSpec spec = SystemSpec::from_matrix(Matrix::Identity(2, 2));
  const Trajectory tr = simulate(spec, NoiseModel::zero(), 10, 0);
  const EstimateReport r = ols_estimate(tr);
  EXPECT_TRUE(r.rank_deficient);
  EXPECT_EQ(r.a_hat, Matrix::Zero(2, 2));
}

TEST(OlsEstimate, ScaledTrajectoryRejected) {
  const SystemSpec spec = SystemSpec::from_matrix(scalar(1.5));
  EXPECT_THROW(ols_estimate(simulate_scaled(spec, NoiseModel::gaussian(), 10, 1)), InvalidArgument);
}

TEST(OlsEstimate, EmptyTrajectoryRejected) {
  Trajectory tr;
  tr.states = Matrix::Zero(1, 2);
  tr.noises = Matrix::Zero(0, 2);
  EXPECT_THROW(ols_estimate(tr), InvalidArgument);
}

TEST(OlsEstimate, ControlInputsRecoverB) {
  SystemSpec spec = SystemSpec::from_matrix(0.5 * Matrix::Identity(2, 2));
  Matrix b(2, 2);
  b << 1.0, 0.5, -0.3, 2.0;
  spec.b = b;
  const Trajectory tr = simulate(spec, NoiseModel::zero(), 20, 3);
  const EstimateReport r = ols_estimate(tr, spec.a, kMachineEps, spec.b);
  ASSERT_TRUE(r.b_hat.has_value());
  EXPECT_LE((*r.b_hat - *spec.b).norm(), 1e-10);
  EXPECT_LE(*r.joint_error_opnorm, 1e-10);
}

TEST(CovarianceMartingale, ZeroTrajectory) {
  const SystemSpec spec = SystemSpec::from_matrix(Matrix::Identity(2, 2));
  const Trajectory tr = simulate(spec, NoiseModel::zero(), 10, 0);
  const CovarianceMartingale cm = covariance_and_martingale(tr);
  EXPECT_EQ(cm.yt, Matrix::Zero(2, 2));
  EXPECT_EQ(cm.st, Matrix::Zero(2, 2));
}

TEST(CovarianceMartingale, MatchesLoop) {
  const SystemSpec spec = SystemSpec::from_matrix(random_matrix_with_radius(2, 0.9, 8));
  const Trajectory tr = simulate(spec, NoiseModel::gaussian(), 50, 2);
  Matrix y = Matrix::Zero(2, 2), s = Matrix::Zero(2, 2);
  for (int t = 0; t < 50; ++t) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        y(i, j) += tr.states(t, i) * tr.states(t, j);
        s(i, j) += tr.states(t, i) * tr.noises(t, j);
      }
    }
  }
  const CovarianceMartingale cm = covariance_and_martingale(tr);
  EXPECT_LE((cm.yt - y).norm(), 1e-12 * y.norm());
  EXPECT_LE((cm.st - s).norm(), 1e-12 * s.norm());
}

TEST(CovarianceMartingale, MissingNoiseRejected) {
  Trajectory tr;
  tr.states = Matrix::Ones(5, 1);
  EXPECT_THROW(covariance_and_martingale(tr), InvalidArgument);
}

TEST(SelfNorm, ZeroCrossTerm) {
  EXPECT_EQ(selfnorm_statistic(random_spd(3, 1), Matrix::Zero(3, 3), Matrix::Identity(3, 3)), 0.0);
}

TEST(SelfNorm, ZeroCovarianceIdentityV) {
  const Matrix s = random_matrix(3, 3, 4);
  EXPECT_NEAR(selfnorm_statistic(Matrix::Zero(3, 3), s, Matrix::Identity(3, 3)), spectral_norm(s), 1e-12);
}

TEST(SelfNorm, MatchesEigendecompositionOracle) {
  const Matrix y = random_spd(3, 10);
  const Matrix v = random_spd(3, 11);
  const Matrix s = random_matrix(3, 3, 12);
  Eigen::SelfAdjointEigenSolver<Matrix> es(y + v);
  const Matrix root = es.operatorInverseSqrt();
  Eigen::JacobiSVD<Matrix> svd(root * s);
  EXPECT_NEAR(selfnorm_statistic(y, s, v), svd.singularValues()(0), 1e-10);
}

TEST(SelfNorm, NonPositiveDefiniteVRejected) {
  Matrix v = Matrix::Identity(2, 2);
  v(1, 1) = -1.0;
  EXPECT_THROW(selfnorm_statistic(Matrix::Zero(2, 2), Matrix::Ones(2, 2), v), InvalidArgument);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  EXPECT_THROW(selfnorm_statistic(Matrix::Zero(2, 2), Matrix::Ones(2, 2), asym), InvalidArgument);
}

TEST(ExplosivePair, SingleStepCoincides) {
  const SystemSpec spec = SystemSpec::from_jordan(JordanSpec::single(1.5, 2));
  const Trajectory tr = simulate(spec, NoiseModel::gaussian(), 1, 9);
  const CovarianceDiagnostics d = explosive_pair(tr, spec.a);
  EXPECT_LE((d.ut - d.ft).norm(), 1e-14);
  EXPECT_NEAR(d.gap_opnorm, 0.0, 1e-14);
}

TEST(ExplosivePair, ScalarGapDecaysGeometrically) {
  const SystemSpec spec = SystemSpec::from_matrix(scalar(1.5));
  std::vector<double> r15, r30;
  for (std::uint64_t s = 0; s < 200; ++s) {
    r15.push_back(explosive_pair(simulate(spec, NoiseModel::gaussian(), 15, s), spec.a).gap_opnorm);
    r30.push_back(explosive_pair(simulate(spec, NoiseModel::gaussian(), 30, s), spec.a).gap_opnorm);
  }
  std::sort(r15.begin(), r15.end());
  std::sort(r30.begin(), r30.end());
  // Medians; the decay is of order 1.5^{-15} (about 2e-3) per 15 steps.
  EXPECT_LT(r30[100] / r15[100], 50 * std::pow(1.5, -13));
}

TEST(ExplosivePair, FtHasRankAtMostD) {
  const SystemSpec spec = SystemSpec::from_matrix(1.5 * Matrix::Identity(2, 2));
  const Trajectory tr = simulate(spec, NoiseModel::gaussian(), 40, 3);
  const CovarianceDiagnostics d = explosive_pair(tr, spec.a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(d.ft, Eigen::EigenvaluesOnly);
  EXPECT_GE(es.eigenvalues()(0), -1e-10 * es.eigenvalues()(1));
  // For a I the terms are all proportional to z_T z_T', so F_T has rank one.
  EXPECT_LE(es.eigenvalues()(0), 1e-10 * es.eigenvalues()(1));
}

TEST(ExplosivePair, SingularAThrows) {
  const SystemSpec spec = SystemSpec::from_matrix(scalar(1.5));
  const Trajectory tr = simulate(spec, NoiseModel::gaussian(), 5, 3);
  EXPECT_THROW(explosive_pair(tr, scalar(0.0)), NumericError);
}

TEST(EstimationError, Basics) {
  const Matrix a = random_matrix(3, 3, 1);
  EXPECT_EQ(estimation_error(a, a), 0.0);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.3;
  d(1, 1) = -0.1;
  EXPECT_NEAR(estimation_error(Matrix::Zero(2, 2), d), 0.3, 1e-15);
  EXPECT_THROW(estimation_error(Matrix::Zero(2, 2), Matrix::Zero(3, 3)), DimensionError);
}

TEST(EstimationError, MatchesSvdOracle) {
  const Matrix a = random_matrix(4, 4, 2), b = random_matrix(4, 4, 3);
  Eigen::JacobiSVD<Matrix> svd(a - b);
  EXPECT_NEAR(estimation_error(b, a), svd.singularValues()(0), 1e-12 * svd.singularValues()(0));
}

TEST(OlsErrorScaled, MatchesUnscaledPath) {
  const SystemSpec spec = SystemSpec::from_jordan(JordanSpec::single(1.3, 2));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const double direct = *ols_estimate(simulate(spec, NoiseModel::gaussian(), 60, s), spec.a).error_opnorm;
    const double scaled = ols_error_scaled(simulate_scaled(spec, NoiseModel::gaussian(), 60, s), spec.a);
    EXPECT_NEAR(scaled, direct, 1e-6 * direct);
  }
}

// Properties

TEST(OlsProperty, ErrorDecompositionIdentity) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const SystemSpec spec = SystemSpec::from_matrix(random_matrix_with_radius(3, 0.3 + 0.012 * s, 40 + s));
    const Trajectory tr = simulate(spec, NoiseModel::gaussian(), 300, s);
    const EstimateReport r = ols_estimate(tr, spec.a);
    ASSERT_FALSE(r.rank_deficient);
    const Matrix lhs = (r.a_hat - spec.a).transpose();
    const Matrix rhs = pseudo_inverse(r.yt) * r.st;
    EXPECT_LE((lhs - rhs).norm(), 1e-9 * std::max(1.0, lhs.norm()));
    EXPECT_NEAR(spectral_norm(rhs), *r.error_opnorm, 1e-9 * *r.error_opnorm);
  }
}

TEST(OlsProperty, SelfNormMonotoneInV) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Matrix y = random_spd(3, 200 + s);
    const Matrix st = random_matrix(3, 3, 300 + s);
    const Matrix v1 = random_spd(3, 400 + s);
    const Matrix v2 = v1 + random_spd(3, 500 + s);
    EXPECT_LE(selfnorm_statistic(y, st, v2), selfnorm_statistic(y, st, v1) * (1 + 1e-12));
    EXPECT_LE(selfnorm_statistic(y, st, 2 * v1), selfnorm_statistic(y, st, v1) * (1 + 1e-12));
  }
}

TEST(OlsProperty, UtMatchesDirectForSmallT) {
  for (int horizon = 1; horizon <= 25; ++horizon) {
    const SystemSpec spec = SystemSpec::from_jordan(JordanSpec::single(1.4, 2));
    const Trajectory tr = simulate(spec, NoiseModel::gaussian(), horizon, horizon);
    const CovarianceDiagnostics d = explosive_pair(tr, spec.a);
    Matrix y = Matrix::Zero(2, 2);
    for (int t = 1; t <= horizon; ++t) y += tr.states.row(t).transpose() * tr.states.row(t);
    const Matrix inv = matrix_power(spec.a, horizon).inverse();
    const Matrix direct = inv * y * inv.transpose();
    EXPECT_LE((d.ut - direct).norm(), 1e-8 * direct.norm()) << "T=" << horizon;
    Eigen::SelfAdjointEigenSolver<Matrix> eu(d.ut, Eigen::EigenvaluesOnly), ef(d.ft, Eigen::EigenvaluesOnly);
    EXPECT_GE(eu.eigenvalues()(0), -1e-10 * d.ut.norm());
    EXPECT_GE(ef.eigenvalues()(0), -1e-10 * d.ft.norm());
  }
}
