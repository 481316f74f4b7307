#include "sysid/lti_sim.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "sysid/error.hpp"

namespace sysid {

Vector SystemSpec::initial_state() const {
  return x0.size() == 0 ? Vector::Zero(a.rows()) : x0;
}

void SystemSpec::validate() const {
  require_square(a, "system A");
  require_finite(a, "system A");
  const auto d = a.rows();
  if (b) {
    if (b->rows() != d || b->cols() < 1) {
      throw DimensionError("system B must have " + std::to_string(d) + " rows, got " +
                           std::to_string(b->rows()) + "x" + std::to_string(b->cols()));
    }
    require_finite(*b, "system B");
  }
  if (x0.size() != 0 && x0.size() != d) {
    throw DimensionError("x0 must have length " + std::to_string(d) + ", got " + std::to_string(x0.size()));
  }
  if (!x0.allFinite()) throw InvalidArgument("x0 has non-finite entries");
  if (jordan) {
    jordan->validate(true);
    if (jordan->dimension() != d) throw DimensionError("Jordan specification dimension does not match A");
  }
  if (jordan_basis && (jordan_basis->rows() != d || jordan_basis->cols() != d)) {
    throw DimensionError("Jordan basis shape does not match A");
  }
}

SystemSpec SystemSpec::from_matrix(Matrix a) {
  SystemSpec s;
  s.a = std::move(a);
  s.validate();
  return s;
}

SystemSpec SystemSpec::from_jordan(const JordanSpec& spec) {
  RealJordanForm rj = realize(spec);
  SystemSpec s;
  s.a = std::move(rj.a);
  s.jordan = spec;
  s.jordan_basis = std::move(rj.basis);
  s.validate();
  return s;
}

std::string_view to_string(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::subweibull: return "subweibull";
    case NoiseFamily::none: return "none";
  }
  return "?";
}

NoiseFamily noise_family_from_string(std::string_view s) {
  if (s == "gaussian" || s == "gaussian_isotropic") return NoiseFamily::gaussian;
  if (s == "subweibull" || s == "subweibull_truncated") return NoiseFamily::subweibull;
  if (s == "none") return NoiseFamily::none;
  throw InvalidArgument("unknown noise family '" + std::string(s) + "'");
}

void NoiseModel::validate() const {
  if (family != NoiseFamily::subweibull) return;
  if (!(alpha > 0.0)) throw InvalidArgument("sub-Weibull alpha must be > 0");
  if (!(b >= 1.0)) throw InvalidArgument("sub-Weibull b must be >= 1");
  if (!(m > 0.0)) throw InvalidArgument("sub-Weibull m must be > 0");
  if (!(delta_trunc > 0.0 && delta_trunc < 1.0)) {
    throw InvalidArgument("sub-Weibull truncation delta must be in (0, 1)");
  }
}

double subweibull_truncation_threshold(double alpha, double b, double m, int horizon, int d,
                                       double delta) {
  if (!(alpha > 0.0 && b > 0.0 && m > 0.0) || horizon < 1 || d < 1) {
    throw InvalidArgument("subweibull_truncation_threshold: parameters must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidArgument("subweibull_truncation_threshold: delta must be in (0, 1)");
  }
  const double arg = m * std::log(b * static_cast<double>(horizon) * d / delta);
  return std::pow(std::max(arg, 0.0), 1.0 / alpha);
}

double sample_subweibull(Rng& rng, double alpha, double m, double threshold) {
  if (!(threshold > 0.0)) throw InvalidArgument("sample_subweibull: threshold must be > 0");
  while (true) {
    const double mag = std::pow(-m * std::log(rng.uniform()), 1.0 / alpha);
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    if (mag <= threshold) return sign * mag;
  }
}

Matrix sample_noise(const NoiseModel& model, int horizon, int d, Rng& rng) {
  model.validate();
  Matrix e = Matrix::Zero(horizon, d);
  switch (model.family) {
    case NoiseFamily::none:
      break;
    case NoiseFamily::gaussian:
      for (int t = 0; t < horizon; ++t) {
        for (int i = 0; i < d; ++i) e(t, i) = rng.normal();
      }
      break;
    case NoiseFamily::subweibull: {
      const double nu =
          subweibull_truncation_threshold(model.alpha, model.b, model.m, horizon, d, model.delta_trunc);
      for (int t = 0; t < horizon; ++t) {
        for (int i = 0; i < d; ++i) e(t, i) = sample_subweibull(rng, model.alpha, model.m, nu);
      }
      break;
    }
  }
  return e;
}

namespace {

Matrix sample_inputs(int horizon, int p, Rng& rng) {
  Matrix u(horizon, p);
  for (int t = 0; t < horizon; ++t) {
    for (int i = 0; i < p; ++i) u(t, i) = rng.normal();
  }
  return u;
}

double rho_max(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) throw NumericError("eigenvalue solver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

Trajectory propagate(const SystemSpec& spec, const Matrix& noises, const std::optional<Matrix>& inputs,
                     std::uint64_t seed) {
  spec.validate();
  const int d = spec.dim();
  const int horizon = static_cast<int>(noises.rows());
  if (horizon < 1) throw InvalidArgument("propagate: need at least one noise row");
  if (noises.cols() != d) throw DimensionError("propagate: noise dimension does not match A");
  if (spec.b && (!inputs || inputs->rows() != horizon || inputs->cols() != spec.input_dim())) {
    throw DimensionError("propagate: inputs must be T x p when B is present");
  }

  Trajectory traj;
  traj.seed = seed;
  traj.noises = noises;
  traj.states.resize(horizon + 1, d);
  traj.states.row(0) = spec.initial_state().transpose();
  Vector x = spec.initial_state();
  for (int t = 0; t < horizon; ++t) {
    Vector next = spec.a * x + noises.row(t).transpose();
    if (spec.b) next.noalias() += *spec.b * inputs->row(t).transpose();
    x = std::move(next);
    traj.states.row(t + 1) = x.transpose();
  }
  if (spec.b) traj.inputs = inputs;
  return traj;
}

Trajectory simulate(const SystemSpec& spec, const NoiseModel& noise, int horizon, std::uint64_t seed,
                    const SimOptions& options) {
  spec.validate();
  if (horizon < 1) throw InvalidArgument("simulate: T must be >= 1");
  const double rho = rho_max(spec.a);
  if (rho > 1.0 && std::log(rho) * horizon > options.log_magnitude_cap) {
    throw OverflowError("simulate: T log(rho_max) = " + std::to_string(std::log(rho) * horizon) +
                        " exceeds the cap " + std::to_string(options.log_magnitude_cap) +
                        "; use simulate_scaled for explosive systems at this horizon");
  }
  Rng rng(derive_stream(seed, {}));
  const Matrix e = sample_noise(noise, horizon, spec.dim(), rng);
  std::optional<Matrix> u;
  if (spec.b) u = sample_inputs(horizon, spec.input_dim(), rng);
  return propagate(spec, e, u, seed);
}

Trajectory simulate_scaled(const SystemSpec& spec, const NoiseModel& noise, int horizon,
                           std::uint64_t seed) {
  spec.validate();
  if (horizon < 1) throw InvalidArgument("simulate_scaled: T must be >= 1");
  Eigen::FullPivLU<Matrix> lu(spec.a);
  if (!lu.isInvertible()) throw NumericError("simulate_scaled: A is singular");
  const Matrix a_inv = lu.inverse();
  const int d = spec.dim();

  Rng rng(derive_stream(seed, {}));
  Trajectory traj;
  traj.seed = seed;
  traj.scaled = true;
  traj.noises = sample_noise(noise, horizon, d, rng);
  if (spec.b) traj.inputs = sample_inputs(horizon, spec.input_dim(), rng);

  traj.states.resize(horizon + 1, d);
  Vector z = spec.initial_state();
  traj.states.row(0) = z.transpose();
  Matrix inv_pow = Matrix::Identity(d, d);
  for (int t = 1; t <= horizon; ++t) {
    inv_pow = a_inv * inv_pow;
    Vector drive = traj.noises.row(t - 1).transpose();
    if (spec.b) drive.noalias() += *spec.b * traj.inputs->row(t - 1).transpose();
    z.noalias() += inv_pow * drive;
    traj.states.row(t) = z.transpose();
  }
  return traj;
}

Matrix unscaled_states(const Trajectory& scaled, const Matrix& a) {
  if (!scaled.scaled) return scaled.states;
  Matrix x(scaled.states.rows(), scaled.states.cols());
  Matrix pow = Matrix::Identity(a.rows(), a.cols());
  for (Eigen::Index t = 0; t < scaled.states.rows(); ++t) {
    x.row(t) = (pow * scaled.states.row(t).transpose()).transpose();
    pow = a * pow;
  }
  return x;
}

double recurrence_residual(const Trajectory& traj, const SystemSpec& spec) {
  const Matrix x = unscaled_states(traj, spec.a);
  double worst = 0.0;
  double scale = 1.0;
  for (Eigen::Index t = 0; t < x.rows(); ++t) scale = std::max(scale, x.row(t).norm());
  for (int t = 0; t < traj.horizon(); ++t) {
    Vector r = x.row(t + 1).transpose() - spec.a * x.row(t).transpose() - traj.noises.row(t).transpose();
    if (spec.b && traj.inputs) r -= *spec.b * traj.inputs->row(t).transpose();
    worst = std::max(worst, r.norm());
  }
  return worst / scale;
}

Matrix augment_control(const Matrix& a, const Matrix& b) {
  require_square(a, "augment_control A");
  if (b.rows() != a.rows() || b.cols() < 1) {
    throw DimensionError("augment_control: B must have " + std::to_string(a.rows()) + " rows");
  }
  const auto d = a.rows();
  const auto p = b.cols();
  Matrix out = Matrix::Zero(d + p, d + p);
  out.topLeftCorner(d, d) = a;
  out.topRightCorner(d, p) = b;
  return out;
}

Matrix random_conditioned_matrix(int d, double conditioning, std::uint64_t seed) {
  if (d < 1) throw DimensionError("random_conditioned_matrix: d must be >= 1");
  if (!(conditioning >= 1.0)) throw InvalidArgument("requested conditioning must be >= 1");
  if (d == 1) return Matrix::Ones(1, 1);
  Rng rng(derive_stream(seed, {0x53494d}));
  Matrix g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  }
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vector s(d);
  for (int i = 0; i < d; ++i) s(i) = std::pow(conditioning, -static_cast<double>(i) / (d - 1));
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

Matrix random_matrix_with_radius(int d, double rho, std::uint64_t seed) {
  if (d < 1) throw DimensionError("random_matrix_with_radius: d must be >= 1");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("random_matrix_with_radius: rho must be positive");
  Rng rng(derive_stream(seed, {0x524144}));
  Matrix g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  }
  return g * (rho / rho_max(g));
}

SystemSpec build_composite(const std::vector<CompositeBlock>& blocks, const Matrix& similarity) {
  if (blocks.empty()) throw InvalidArgument("build_composite: no blocks");
  JordanSpec all;
  int d = 0;
  for (const auto& blk : blocks) {
    blk.spec.validate(true);
    d += blk.spec.dimension();
    all.blocks.insert(all.blocks.end(), blk.spec.blocks.begin(), blk.spec.blocks.end());
  }
  require_square(similarity, "build_composite similarity");
  if (similarity.rows() != d) throw DimensionError("build_composite: similarity must be d x d");
  Eigen::FullPivLU<Matrix> lu(similarity);
  if (!lu.isInvertible()) throw NumericError("build_composite: similarity is singular");

  Matrix r = Matrix::Zero(d, d);
  CMatrix p0 = CMatrix::Zero(d, d);
  SystemSpec s;
  int offset = 0;
  for (const auto& blk : blocks) {
    const RealJordanForm rj = realize(blk.spec);
    const int k = blk.spec.dimension();
    r.block(offset, offset, k, k) = rj.a;
    p0.block(offset, offset, k, k) = rj.basis;
    s.partition.push_back({blk.tag, offset, k});
    offset += k;
  }
  s.a = lu.inverse() * r * similarity;
  s.similarity = similarity;
  s.jordan = all;
  s.jordan_basis = p0 * similarity.cast<Complex>();
  s.validate();
  return s;
}

SystemSpec build_composite(const std::vector<CompositeBlock>& blocks, std::uint64_t similarity_seed,
                           double conditioning) {
  if (!(conditioning >= 1.0)) throw InvalidArgument("build_composite: conditioning must be >= 1");
  int d = 0;
  for (const auto& blk : blocks) d += blk.spec.dimension();
  return build_composite(blocks, random_conditioned_matrix(d, conditioning, similarity_seed));
}

}  // namespace sysid
