#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <gtest/gtest.h>

#include "sysid/error.hpp"
#include "sysid/matrix_core.hpp"
#include "sysid/rng.hpp"

using namespace sysid;

namespace {

Matrix gaussian_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

Matrix direct_gramian(const Matrix& a, int t) {
  Matrix g = Matrix::Zero(a.rows(), a.cols());
  Matrix p = Matrix::Identity(a.rows(), a.cols());
  for (int k = 0; k <= t; ++k) {
    g += p * p.transpose();
    p = a * p;
  }
  return g;
}

}  // namespace

// Oracles

TEST(JordanBlock, ThreeTwo) {
  Matrix expected(2, 2);
  expected << 3, 1, 0, 3;
  EXPECT_EQ(jordan_block(3.0, 2), expected);
}

TEST(JordanBlock, SizeOneIsScalar) {
  const CMatrix j = jordan_block(Complex(0.3, -0.2), 1);
  ASSERT_EQ(j.rows(), 1);
  EXPECT_EQ(j(0, 0), Complex(0.3, -0.2));
}

TEST(JordanBlock, NilpotentCubeIsZero) {
  const Matrix n = jordan_block(0.0, 3);
  EXPECT_EQ(matrix_power(n, 3), Matrix::Zero(3, 3));
  EXPECT_NE(matrix_power(n, 2), Matrix::Zero(3, 3));
}

TEST(JordanBlock, ZeroSizeThrows) { EXPECT_THROW(jordan_block(1.0, 0), InvalidArgument); }

TEST(Gramian, TimeZeroIsIdentity) {
  EXPECT_TRUE(gramian(gaussian_matrix(3, 3, 1), 0).isApprox(Matrix::Identity(3, 3)));
}

TEST(Gramian, ZeroMatrixIsIdentity) {
  for (int t : {0, 1, 7, 50}) EXPECT_EQ(gramian(Matrix::Zero(2, 2), t), Matrix::Identity(2, 2));
}

TEST(Gramian, ScalarTwoAtTwo) {
  Matrix a(1, 1);
  a << 2.0;
  EXPECT_DOUBLE_EQ(gramian(a, 2)(0, 0), 21.0);
}

TEST(Gramian, NonSquareThrows) { EXPECT_THROW(gramian(Matrix::Zero(2, 3), 2), InvalidArgument); }

TEST(Gramian, LogTraceMatchesDirect) {
  const Matrix a = realize(JordanSpec::single(1.2, 2)).a;
  EXPECT_NEAR(log_trace_gramian(a, 40), std::log(direct_gramian(a, 40).trace()), 1e-10);
}

TEST(Gramian, LogTraceStaysFiniteWhenPowersOverflow) {
  Matrix a(1, 1);
  a << 10.0;
  const double lt = log_trace_gramian(a, 400);
  ASSERT_TRUE(std::isfinite(lt));
  // sum_{k<=400} 100^k = 100^400 / (1 - 1/100) up to a negligible tail.
  EXPECT_NEAR(lt, 800 * std::log(10.0) - std::log(0.99), 1e-9);
}

TEST(SpectralReport, StableScalar) {
  Matrix a(1, 1);
  a << 0.5;
  const SpectralReport r = spectral_report(a, 100, 1.0);
  ASSERT_EQ(r.moduli.size(), 1u);
  EXPECT_DOUBLE_EQ(r.moduli[0], 0.5);
  EXPECT_TRUE(r.only(RegimeClass::S0));
  EXPECT_TRUE(r.regular);
}

TEST(SpectralReport, UnitScalarIsMarginal) {
  Matrix a(1, 1);
  a << 1.0;
  EXPECT_TRUE(spectral_report(a, 100, 1.0).only(RegimeClass::S1));
}

TEST(SpectralReport, ScaledIdentityIsExplosiveAndIrregular) {
  const SpectralReport r = spectral_report(1.1 * Matrix::Identity(2, 2), 1000, 1.0);
  EXPECT_TRUE(r.only(RegimeClass::S2));
  EXPECT_FALSE(r.regular);
}

TEST(SpectralReport, JordanBlockIsRegular) {
  Matrix a(2, 2);
  a << 1.1, 1.0, 0.0, 1.1;
  EXPECT_TRUE(spectral_report(a, 1000, 1.0).regular);
}

TEST(Classify, BoundaryTies) {
  EXPECT_EQ(classify_modulus(1.0 - 1.0 / 8, 8, 1.0), RegimeClass::S0);
  EXPECT_EQ(classify_modulus(1.0 + 1.0 / 8, 8, 1.0), RegimeClass::S1);
  EXPECT_EQ(classify_modulus(std::nextafter(1.0 + 1.0 / 8, 2.0), 8, 1.0), RegimeClass::S2);
}

TEST(PseudoInverse, Identity) { EXPECT_TRUE(pseudo_inverse(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3))); }

TEST(PseudoInverse, Zero) { EXPECT_EQ(pseudo_inverse(Matrix::Zero(2, 3)), Matrix::Zero(3, 2)); }

TEST(PseudoInverse, RankDeficientProjector) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  EXPECT_TRUE(pseudo_inverse(m).isApprox(m));
}

TEST(OutboxPhi, UnitScalarSingleTerm) {
  const OutboxPhi phi = outbox_phi(JordanSpec::single(1.0, 1), 1);
  EXPECT_NEAR(phi.phi_min, 1.0, 1e-12);
  EXPECT_NEAR(phi.phi_max, 1.0, 1e-12);
}

TEST(OutboxPhi, ScalarTwoThreeTerms) {
  const OutboxPhi phi = outbox_phi(JordanSpec::single(2.0, 1), 3);
  EXPECT_NEAR(phi.phi_min, std::sqrt(21.0) / 4.0, 1e-12);
  EXPECT_NEAR(phi.phi_max, std::sqrt(21.0) / 4.0, 1e-12);
}

TEST(OutboxPhi, RegularJordanPositive) {
  const OutboxPhi phi = outbox_phi(JordanSpec::single(1.1, 2), 10);
  EXPECT_GT(phi.phi_min, 0.0);
  EXPECT_GE(phi.phi_max, phi.phi_min);
}

TEST(OutboxPhi, ZeroEigenvalueThrows) {
  EXPECT_THROW(outbox_phi(JordanSpec::single(0.0, 1), 3), Error);
}

TEST(GramianRatio, IdentityDoubling) {
  const int t2 = 16;
  const GramianRatioCheck c = gramian_ratio_bound_check(Matrix::Identity(2, 2), 2 * t2, t2);
  EXPECT_NEAR(c.lambda1, (2.0 * t2 + 1) / (t2 + 1), 1e-12);
  EXPECT_LT(c.lambda1, 2.0);
  EXPECT_TRUE(c.poly_bound_ok);
}

TEST(GramianRatio, StableScalarNearOne) {
  Matrix a(1, 1);
  a << 0.5;
  const GramianRatioCheck c = gramian_ratio_bound_check(a, 40, 20);
  EXPECT_NEAR(c.lambda1, 1.0, 1e-10);
  EXPECT_TRUE(c.poly_bound_ok);
}

TEST(GramianRatio, UnitJordanBlock) {
  EXPECT_TRUE(gramian_ratio_bound_check(jordan_block(1.0, 2), 32, 16).poly_bound_ok);
}

TEST(GramianRatio, BelowValidityRangeThrows) {
  EXPECT_THROW(gramian_ratio_bound_check(Matrix::Identity(2, 2), 40, 15), InvalidArgument);
}

TEST(RequireFinite, RejectsNaN) {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = std::nan("");
  EXPECT_THROW(require_finite(m, "m"), InvalidArgument);
}

TEST(JordanSpec, UnpairedComplexRejectedForRealTarget) {
  JordanSpec s{{{Complex(1.0, 0.5), 1}}};
  EXPECT_THROW(s.validate(true), InvalidArgument);
  EXPECT_NO_THROW(s.validate(false));
}

TEST(Realize, ConjugatePairGivesRealMatrixWithSameEigenvalues) {
  JordanSpec s{{{Complex(0.6, 0.8), 1}, {Complex(0.6, -0.8), 1}, {Complex(1.5, 0.0), 1}}};
  const RealJordanForm f = realize(s);
  Eigen::EigenSolver<Matrix> es(f.a);
  std::vector<double> moduli;
  for (int i = 0; i < 3; ++i) moduli.push_back(std::abs(es.eigenvalues()(i)));
  std::sort(moduli.begin(), moduli.end());
  EXPECT_NEAR(moduli[0], 1.0, 1e-12);
  EXPECT_NEAR(moduli[1], 1.0, 1e-12);
  EXPECT_NEAR(moduli[2], 1.5, 1e-12);
  // A = P^{-1} Lambda P.
  const CMatrix lhs = f.basis * f.a.cast<Complex>();
  const CMatrix rhs = s.lambda() * f.basis;
  EXPECT_LT((lhs - rhs).norm(), 1e-10);
}

TEST(LogSigmaMaxPower, MatchesDirect) {
  const Matrix a = realize(JordanSpec::single(1.3, 3)).a;
  EXPECT_NEAR(log_sigma_max_power(a, 25), std::log(spectral_norm(matrix_power(a, 25))), 1e-10);
}

// Properties

TEST(GramianProperty, MonotoneAndDirect) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix a = 0.4 * gaussian_matrix(3, 3, 100 + s);
    for (int t = 1; t <= 64; ++t) {
      const Matrix g = gramian(a, t);
      const Matrix diff = g - gramian(a, t - 1);
      Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
      EXPECT_GE(es.eigenvalues()(0), -1e-10 * g.norm());
      const Matrix direct = direct_gramian(a, t);
      EXPECT_LE((g - direct).norm(), 1e-12 * direct.norm());
    }
  }
}

TEST(JordanInverseProperty, DiagonalsConstant) {
  for (double lambda : {2.0, 1.5}) {
    for (int d = 1; d <= 4; ++d) {
      const Matrix inv = jordan_block(lambda, d).inverse();
      for (int k = 1; k <= 5; ++k) {
        const Matrix p = matrix_power(inv, k);
        for (int off = 0; off < d; ++off) {
          const double ref = p(0, off);
          for (int i = 1; i + off < d; ++i) EXPECT_NEAR(p(i, i + off), ref, 1e-10 * std::max(1.0, std::abs(ref)));
          for (int i = 0; i + off < d && off > 0; ++i) EXPECT_EQ(p(i + off, i), 0.0);
        }
      }
    }
  }
}

TEST(PseudoInverseProperty, PenroseIdentities) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const int rows = 2 + static_cast<int>(s % 4);
    const int cols = 2 + static_cast<int>((s / 4) % 3);
    Matrix m = gaussian_matrix(rows, cols, 500 + s);
    if (s % 3 == 0) m.col(0) = m.col(1);  // rank deficient
    const Matrix p = pseudo_inverse(m);
    const double scale = std::max(1.0, m.norm());
    EXPECT_LE((m * p * m - m).norm(), 1e-10 * scale);
    EXPECT_LE((p * m * p - p).norm(), 1e-10 * std::max(1.0, p.norm()));
    EXPECT_LE((m * p - (m * p).transpose()).norm(), 1e-10);
    EXPECT_LE((p * m - (p * m).transpose()).norm(), 1e-10);
  }
}

TEST(ClassifyProperty, ExactlyOneClass) {
  for (int horizon : {1, 7, 100, 4000}) {
    for (double c : {0.5, 1.0, 3.0}) {
      for (double rho = 0.0; rho < 2.5; rho += 0.0037) {
        const RegimeClass k = classify_modulus(rho, horizon, c);
        const bool s0 = rho <= 1 - c / horizon;
        const bool s2 = rho > 1 + c / horizon;
        const bool s1 = !s0 && !s2;
        EXPECT_EQ(static_cast<int>(s0) + static_cast<int>(s1) + static_cast<int>(s2), 1);
        EXPECT_EQ(k, s0 ? RegimeClass::S0 : (s1 ? RegimeClass::S1 : RegimeClass::S2));
      }
    }
  }
}

TEST(RegularityProperty, MatchesCombinatorialRule) {
  const std::vector<double> values{0.5, 1.0, 1.5, 2.0};
  Rng rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    JordanSpec spec;
    const int blocks = 1 + static_cast<int>(rng.next_u64() % 4);
    for (int b = 0; b < blocks; ++b) {
      spec.blocks.push_back({Complex(values[rng.next_u64() % values.size()], 0.0), 1 + static_cast<int>(rng.next_u64() % 2)});
    }
    bool expected = true;
    for (double v : values) {
      int count = 0;
      for (const auto& b : spec.blocks) count += b.eigenvalue.real() == v ? 1 : 0;
      if (v > 1.0 && count > 1) expected = false;
    }
    EXPECT_EQ(is_regular(realize(spec).a), expected) << "rep " << rep;
  }
}

TEST(GramianProperty, LinearGrowthForUnitJordan) {
  for (int d : {2, 3}) {
    const Matrix a = jordan_block(1.0, d);
    double lo = 1e300;
    for (int t = 16; t <= 1024; t *= 2) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(gramian(a, t), Eigen::EigenvaluesOnly);
      lo = std::min(lo, es.eigenvalues()(0) / t);
    }
    EXPECT_GT(lo, 0.0);
  }
}
