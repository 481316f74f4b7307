#include "sysid/matrix_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "sysid/error.hpp"
#include "sysid/rng.hpp"

namespace sysid {

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw InvalidArgument(std::string(what) + ": matrix has non-finite entries");
  }
}

void require_square(const Matrix& m, std::string_view what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError(std::string(what) + ": expected a non-empty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

double sigma_min(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Vector s = singular_values(m);
  return s(s.size() - 1);
}

Matrix matrix_power(const Matrix& a, int k) {
  require_square(a, "matrix_power");
  if (k < 0) throw InvalidArgument("matrix_power: negative exponent");
  Matrix result = Matrix::Identity(a.rows(), a.cols());
  Matrix base = a;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

double log_sigma_max_power(const Matrix& a, int k) {
  require_square(a, "log_sigma_max_power");
  if (k < 0) throw InvalidArgument("log_sigma_max_power: negative exponent");
  Matrix p = Matrix::Identity(a.rows(), a.cols());
  double log_scale = 0.0;
  for (int i = 0; i < k; ++i) {
    p = a * p;
    const double s = p.cwiseAbs().maxCoeff();
    if (s == 0.0) return -std::numeric_limits<double>::infinity();
    p /= s;
    log_scale += std::log(s);
  }
  return log_scale + std::log(spectral_norm(p));
}

// ---------------------------------------------------------------------------

int JordanSpec::dimension() const {
  int d = 0;
  for (const auto& b : blocks) d += b.size;
  return d;
}

std::vector<Complex> JordanSpec::eigenvalues() const {
  std::vector<Complex> out;
  for (const auto& b : blocks) out.insert(out.end(), static_cast<std::size_t>(b.size), b.eigenvalue);
  return out;
}

CMatrix JordanSpec::lambda() const {
  const int d = dimension();
  CMatrix lam = CMatrix::Zero(d, d);
  int offset = 0;
  for (const auto& b : blocks) {
    lam.block(offset, offset, b.size, b.size) = jordan_block(b.eigenvalue, b.size);
    offset += b.size;
  }
  return lam;
}

namespace {

bool is_real(Complex z) { return z.imag() == 0.0; }

// Index of the conjugate partner of block i, or -1.
int find_conjugate(const std::vector<JordanBlock>& blocks, std::size_t i,
                   const std::vector<bool>& used) {
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (j == i || used[j]) continue;
    if (blocks[j].size == blocks[i].size && blocks[j].eigenvalue == std::conj(blocks[i].eigenvalue)) {
      return static_cast<int>(j);
    }
  }
  return -1;
}

}  // namespace

void JordanSpec::validate(bool real_target) const {
  if (blocks.empty()) throw InvalidArgument("JordanSpec: no blocks");
  for (const auto& b : blocks) {
    if (b.size < 1) throw InvalidArgument("JordanSpec: block size must be >= 1");
    if (!std::isfinite(b.eigenvalue.real()) || !std::isfinite(b.eigenvalue.imag())) {
      throw InvalidArgument("JordanSpec: non-finite eigenvalue");
    }
  }
  if (!real_target) return;
  std::vector<bool> used(blocks.size(), false);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (used[i] || is_real(blocks[i].eigenvalue)) continue;
    const int j = find_conjugate(blocks, i, used);
    if (j < 0) {
      throw InvalidArgument("JordanSpec: complex eigenvalue block without a conjugate partner");
    }
    used[i] = used[static_cast<std::size_t>(j)] = true;
  }
}

JordanSpec JordanSpec::diagonal(const std::vector<double>& eigenvalues) {
  JordanSpec spec;
  for (double l : eigenvalues) spec.blocks.push_back({Complex(l, 0.0), 1});
  return spec;
}

JordanSpec JordanSpec::single(double eigenvalue, int size) {
  return JordanSpec{{{Complex(eigenvalue, 0.0), size}}};
}

RealJordanForm realize(const JordanSpec& spec) {
  spec.validate(true);
  const int d = spec.dimension();
  RealJordanForm out{Matrix::Zero(d, d), CMatrix::Zero(d, d)};

  std::vector<int> lambda_offset;
  int off = 0;
  for (const auto& b : spec.blocks) {
    lambda_offset.push_back(off);
    off += b.size;
  }

  std::vector<bool> used(spec.blocks.size(), false);
  int r0 = 0;  // next free real coordinate
  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    if (used[i]) continue;
    const auto& b = spec.blocks[i];
    const int k = b.size;
    if (is_real(b.eigenvalue)) {
      used[i] = true;
      out.a.block(r0, r0, k, k) = jordan_block(b.eigenvalue.real(), k);
      out.basis.block(lambda_offset[i], r0, k, k) = CMatrix::Identity(k, k);
      r0 += k;
      continue;
    }
    const auto j = static_cast<std::size_t>(find_conjugate(spec.blocks, i, used));
    used[i] = used[j] = true;
    const double re = b.eigenvalue.real();
    const double im = b.eigenvalue.imag();
    // Real block: kron(I_k, C) + kron(N_k, I_2) with C = [[re, -im], [im, re]].
    for (int q = 0; q < k; ++q) {
      const int p = r0 + 2 * q;
      out.a(p, p) = re;
      out.a(p, p + 1) = -im;
      out.a(p + 1, p) = im;
      out.a(p + 1, p + 1) = re;
      if (q + 1 < k) {
        out.a(p, p + 2) = 1.0;
        out.a(p + 1, p + 3) = 1.0;
      }
    }
    // C [1, -i]' = (re + i im) [1, -i]'. With W2 = [w, conj(w)],
    // W2^{-1} = 0.5 [[1, i], [1, -i]]: row q of block i's chain reads
    // coordinates (2q, 2q+1) with (1, i)/2, the conjugate chain with (1, -i)/2.
    const Complex half(0.5, 0.0);
    const Complex half_i(0.0, 0.5);
    for (int q = 0; q < k; ++q) {
      const int p = r0 + 2 * q;
      out.basis(lambda_offset[i] + q, p) = half;
      out.basis(lambda_offset[i] + q, p + 1) = half_i;
      out.basis(lambda_offset[j] + q, p) = half;
      out.basis(lambda_offset[j] + q, p + 1) = -half_i;
    }
    r0 += 2 * k;
  }
  return out;
}

CMatrix jordan_block(Complex lambda, int d) {
  if (d < 1) throw DimensionError("jordan_block: dimension must be >= 1");
  CMatrix j = CMatrix::Zero(d, d);
  j.diagonal().setConstant(lambda);
  if (d > 1) j.diagonal(1).setOnes();
  return j;
}

Matrix jordan_block(double lambda, int d) {
  if (d < 1) throw DimensionError("jordan_block: dimension must be >= 1");
  Matrix j = Matrix::Zero(d, d);
  j.diagonal().setConstant(lambda);
  if (d > 1) j.diagonal(1).setOnes();
  return j;
}

// ---------------------------------------------------------------------------

Matrix gramian(const Matrix& a, int t) {
  require_square(a, "gramian");
  if (t < 0) throw InvalidArgument("gramian: t must be >= 0");
  const auto d = a.rows();
  Matrix g = Matrix::Identity(d, d);
  Matrix p = Matrix::Identity(d, d);
  for (int k = 1; k <= t; ++k) {
    p = a * p;
    g.noalias() += p * p.transpose();
  }
  return g;
}

double log_trace_gramian(const Matrix& a, int t) {
  require_square(a, "log_trace_gramian");
  if (t < 0) throw InvalidArgument("log_trace_gramian: t must be >= 0");
  const auto d = a.rows();
  // k = 0 term: tr(I) = d.
  double lse = std::log(static_cast<double>(d));
  Matrix p = Matrix::Identity(d, d);
  double log_scale = 0.0;
  for (int k = 1; k <= t; ++k) {
    p = a * p;
    const double s = p.norm();
    if (s == 0.0) break;  // nilpotent: all later terms vanish
    p /= s;
    log_scale += std::log(s);
    const double term = 2.0 * log_scale;  // log ||A^k||_F^2
    const double hi = std::max(lse, term);
    lse = hi + std::log(std::exp(lse - hi) + std::exp(term - hi));
  }
  return lse;
}

// ---------------------------------------------------------------------------

std::string_view to_string(RegimeClass c) {
  switch (c) {
    case RegimeClass::S0: return "S0";
    case RegimeClass::S1: return "S1";
    case RegimeClass::S2: return "S2";
  }
  return "?";
}

RegimeClass classify_modulus(double rho, int horizon, double boundary_c) {
  if (horizon < 1) throw InvalidArgument("classify_modulus: T must be >= 1");
  if (!(boundary_c > 0.0)) throw InvalidArgument("classify_modulus: C must be > 0");
  const double margin = boundary_c / static_cast<double>(horizon);
  if (rho <= 1.0 - margin) return RegimeClass::S0;
  if (rho <= 1.0 + margin) return RegimeClass::S1;
  return RegimeClass::S2;
}

bool SpectralReport::only(RegimeClass c) const {
  return std::all_of(per_eigenvalue_class.begin(), per_eigenvalue_class.end(),
                     [c](RegimeClass x) { return x == c; });
}

namespace {

bool regular_from_eigenvalues(const Matrix& a, const std::vector<Complex>& eig, double rel_tol) {
  const auto d = a.rows();
  const double tol = rel_tol * std::max(spectral_norm(a), 1.0);
  const CMatrix ac = a.cast<Complex>();
  for (const Complex& l : eig) {
    if (std::abs(l) <= 1.0 + tol) continue;
    CMatrix shifted = ac;
    shifted.diagonal().array() -= l;
    const Eigen::VectorXd s = Eigen::JacobiSVD<CMatrix>(shifted).singularValues();
    const auto rank = (s.array() > tol).count();
    if (d - rank != 1) return false;
  }
  return true;
}

std::vector<Complex> eigenvalues_of(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigenvalue solver failed to converge for a " + std::to_string(a.rows()) +
                       "x" + std::to_string(a.cols()) + " matrix (||A|| = " +
                       std::to_string(spectral_norm(a)) + ")");
  }
  const CVector ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace

SpectralReport spectral_report(const Matrix& a, int horizon, double boundary_c, double rel_tol) {
  require_square(a, "spectral_report");
  require_finite(a, "spectral_report");
  if (horizon < 1) throw InvalidArgument("spectral_report: T must be >= 1");
  if (!(boundary_c > 0.0)) throw InvalidArgument("spectral_report: C must be > 0");

  SpectralReport rep;
  rep.horizon_T = horizon;
  rep.boundary_C = boundary_c;
  rep.eigenvalues = eigenvalues_of(a);
  std::stable_sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
                   [](Complex x, Complex y) { return std::abs(x) > std::abs(y); });
  for (const Complex& l : rep.eigenvalues) {
    const double rho = std::abs(l);
    const RegimeClass c = classify_modulus(rho, horizon, boundary_c);
    rep.moduli.push_back(rho);
    rep.per_eigenvalue_class.push_back(c);
    rep.present[static_cast<int>(c)] = true;
  }
  rep.regular = regular_from_eigenvalues(a, rep.eigenvalues, rel_tol);
  return rep;
}

bool is_regular(const Matrix& a, double rel_tol) {
  require_square(a, "is_regular");
  return regular_from_eigenvalues(a, eigenvalues_of(a), rel_tol);
}

// ---------------------------------------------------------------------------

Matrix pseudo_inverse(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return Matrix(m.cols(), m.rows());
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff =
      rel_tol * s(0) * static_cast<double>(std::max(m.rows(), m.cols()));
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// ---------------------------------------------------------------------------

std::pair<double, double> outbox_objective(const CMatrix& lambda_inv, const Vector& v,
                                           int horizon) {
  const auto d = lambda_inv.rows();
  CMatrix sum = CMatrix::Zero(d, d);
  CVector w = v.cast<Complex>();
  for (int i = 0; i < horizon; ++i) {
    sum.noalias() += w * w.adjoint();
    w = lambda_inv * w;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(sum, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  return {std::max(ev(0), 0.0), std::max(ev(ev.size() - 1), 0.0)};
}

namespace {

constexpr std::uint64_t kOutboxSeed = 0x6f7574626f78ULL;  // "outbox"

// Magnitude grid in [1, g]: u = g / k for k = 1..g, i.e. 1/u uniform in (0, 1].
double grid_magnitude(int k, int g) { return static_cast<double>(g) / static_cast<double>(k); }

}  // namespace

OutboxPhi outbox_phi(const JordanSpec& spec, int horizon, int grid_density) {
  spec.validate(false);
  if (horizon < 1) throw InvalidArgument("outbox_phi: T must be >= 1");
  if (grid_density < 1) throw InvalidArgument("outbox_phi: grid density must be >= 1");
  for (const auto& b : spec.blocks) {
    if (std::abs(b.eigenvalue) == 0.0) {
      throw InvalidArgument("outbox_phi: zero eigenvalue, Lambda is singular");
    }
  }
  const int d = spec.dimension();
  const CMatrix lambda_inv = spec.lambda().inverse();
  const int g = grid_density;

  OutboxPhi out;
  out.grid_density = g;
  out.phi_min = std::numeric_limits<double>::infinity();

  auto visit_min = [&](const Vector& v) {
    out.phi_min = std::min(out.phi_min, outbox_objective(lambda_inv, v, horizon).first);
    ++out.evaluations_min;
  };
  auto visit_max = [&](const Vector& v) {
    out.phi_max = std::max(out.phi_max, outbox_objective(lambda_inv, v.normalized(), horizon).second);
    ++out.evaluations_max;
  };

  // phi_min: pin coordinate j at +1, remaining coordinates take a sign and a
  // magnitude >= 1. The global sign of v does not change vv'.
  if (d == 1) {
    visit_min(Vector::Ones(1));
  } else if (d <= 3) {
    const int free = d - 1;
    long mag_count = 1;
    for (int i = 0; i < free; ++i) mag_count *= g;
    for (int j = 0; j < d; ++j) {
      for (int signs = 0; signs < (1 << free); ++signs) {
        for (long m = 0; m < mag_count; ++m) {
          Vector v(d);
          long rest = m;
          int f = 0;
          for (int i = 0; i < d; ++i) {
            if (i == j) {
              v(i) = 1.0;
              continue;
            }
            const int k = static_cast<int>(rest % g) + 1;
            rest /= g;
            v(i) = ((signs >> f) & 1 ? -1.0 : 1.0) * grid_magnitude(k, g);
            ++f;
          }
          visit_min(v);
        }
      }
    }
  } else {
    Rng rng(kOutboxSeed);
    const long samples = static_cast<long>(g) * g * g;
    for (int j = 0; j < d; ++j) {
      for (long s = 0; s < samples; ++s) {
        Vector v(d);
        for (int i = 0; i < d; ++i) {
          if (i == j) {
            v(i) = 1.0;
          } else {
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            v(i) = sign / rng.uniform();  // magnitude >= 1, 1/|v_i| uniform
          }
        }
        visit_min(v);
      }
    }
  }

  // phi_max over the unit sphere (up to sign).
  const double pi = std::numbers::pi;
  if (d == 1) {
    visit_max(Vector::Ones(1));
  } else if (d == 2) {
    for (int k = 0; k < g; ++k) {
      const double th = pi * k / g;
      visit_max(Vector{{std::cos(th), std::sin(th)}});
    }
  } else if (d == 3) {
    for (int a = 0; a <= g; ++a) {
      const double th = pi * a / g;
      for (int b = 0; b < g; ++b) {
        const double ph = pi * b / g;
        visit_max(Vector{{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)}});
      }
    }
  } else {
    Rng rng(kOutboxSeed + 1);
    const long samples = static_cast<long>(g) * g * g;
    for (int i = 0; i < d; ++i) visit_max(Vector::Unit(d, i));
    for (long s = 0; s < samples; ++s) {
      Vector v(d);
      for (int i = 0; i < d; ++i) v(i) = rng.normal();
      if (v.norm() > 0.0) visit_max(v);
    }
  }

  out.phi_min = std::sqrt(out.phi_min);
  out.phi_max = std::sqrt(out.phi_max);
  return out;
}

// ---------------------------------------------------------------------------

GramianRatioCheck gramian_ratio_bound_check(const Matrix& a, int t1, int t2) {
  require_square(a, "gramian_ratio_bound_check");
  const auto d = static_cast<int>(a.rows());
  if (t2 < 8 * d) {
    throw InvalidArgument("gramian_ratio_bound_check: t2 must be >= 8d (got t2=" +
                          std::to_string(t2) + ", d=" + std::to_string(d) + ")");
  }
  if (t1 <= t2) throw InvalidArgument("gramian_ratio_bound_check: requires t1 > t2");

  const Matrix g1 = gramian(a, t1);
  const Matrix g2 = gramian(a, t2);
  if (!g1.allFinite() || !g2.allFinite()) {
    throw NumericError("gramian_ratio_bound_check: Gramian overflow");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(g1, g2, Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success) throw NumericError("gramian_ratio_bound_check: eigen solve failed");

  GramianRatioCheck out;
  out.lambda1 = ges.eigenvalues().maxCoeff();

  Eigen::EigenSolver<Matrix> es(a, true);
  if (es.info() != Eigen::Success) throw NumericError("gramian_ratio_bound_check: eigen solve failed");
  const Eigen::VectorXd sv = Eigen::JacobiSVD<CMatrix>(es.eigenvectors()).singularValues();
  const double smin = sv(sv.size() - 1);
  const double kappa = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  const double beta = static_cast<double>(t1) / static_cast<double>(t2);
  out.bound = kappa * kappa * d * std::pow(beta, static_cast<double>(d * d));
  out.poly_bound_ok = out.lambda1 <= out.bound;
  return out;
}

}  // namespace sysid
