#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "sysid/matrix_core.hpp"
#include "sysid/rng.hpp"

namespace sysid {

/// One diagonal block of a composite system, tagged with its intended regime.
struct CompositeBlock {
  JordanSpec spec;
  RegimeClass tag = RegimeClass::S0;
};

/// Real-coordinate range occupied by a composite block (before similarity).
struct CompositePart {
  RegimeClass tag = RegimeClass::S0;
  int offset = 0;
  int size = 0;

  friend bool operator==(const CompositePart&, const CompositePart&) = default;
};

/// X_{t+1} = A X_t (+ B U_t) + eta_{t+1}, X_0 = x0.
struct SystemSpec {
  Matrix a;
  std::optional<Matrix> b;
  Vector x0;  // empty means the zero vector
  /// Known Jordan structure with basis P such that A = P^{-1} Lambda P.
  std::optional<JordanSpec> jordan;
  std::optional<CMatrix> jordan_basis;
  /// Composite construction record: A = Ptilde^{-1} diag(blocks) Ptilde.
  std::optional<Matrix> similarity;
  std::vector<CompositePart> partition;

  int dim() const { return static_cast<int>(a.rows()); }
  int input_dim() const { return b ? static_cast<int>(b->cols()) : 0; }
  Vector initial_state() const;
  /// Throws DimensionError / InvalidArgument on broken invariants.
  void validate() const;

  static SystemSpec from_matrix(Matrix a);
  /// A = realize(spec).a with the Jordan basis recorded.
  static SystemSpec from_jordan(const JordanSpec& spec);
};

enum class NoiseFamily { gaussian, subweibull, none };

std::string_view to_string(NoiseFamily f);
NoiseFamily noise_family_from_string(std::string_view s);

struct NoiseModel {
  NoiseFamily family = NoiseFamily::gaussian;
  // Sub-Weibull tail P(|eta| > y) <= b exp(-y^alpha / m), truncated at
  // nu_T(delta_trunc).
  double alpha = 1.0;
  double b = 1.0;
  double m = 1.0;
  double delta_trunc = 0.05;

  void validate() const;

  static NoiseModel gaussian() { return {}; }
  static NoiseModel zero() { return {NoiseFamily::none}; }
  static NoiseModel subweibull(double alpha, double b, double m, double delta_trunc) {
    return {NoiseFamily::subweibull, alpha, b, m, delta_trunc};
  }

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

struct Trajectory {
  Matrix states;                 // (T+1) x d: X_0..X_T, or z_0..z_T when scaled
  Matrix noises;                 // T x d: eta_1..eta_T
  std::optional<Matrix> inputs;  // T x p: U_0..U_{T-1}
  std::uint64_t seed = 0;
  bool scaled = false;

  int horizon() const { return static_cast<int>(noises.rows()); }
  int dim() const { return static_cast<int>(states.cols()); }
};

struct SimOptions {
  /// Refuse unscaled simulation when T * log(rho_max) exceeds this.
  double log_magnitude_cap = 650.0;
};

/// nu_T(delta) = (m log(b T d / delta))^{1/alpha}.
double subweibull_truncation_threshold(double alpha, double b, double m, int horizon, int d,
                                       double delta);

/// Symmetric variate with |eta| drawn by inverse CDF of exp(-y^alpha/m) and
/// rejected until |eta| <= threshold.
double sample_subweibull(Rng& rng, double alpha, double m, double threshold);

/// T x d noise matrix drawn from `model` (row t holds eta_{t+1}).
Matrix sample_noise(const NoiseModel& model, int horizon, int d, Rng& rng);

/// Runs the recursion with a given noise sequence (and optional inputs).
Trajectory propagate(const SystemSpec& spec, const Matrix& noises,
                     const std::optional<Matrix>& inputs = std::nullopt, std::uint64_t seed = 0);

/// Deterministic in (spec, noise, T, seed). Inputs U_t ~ N(0, I) when B is set.
Trajectory simulate(const SystemSpec& spec, const NoiseModel& noise, int horizon,
                    std::uint64_t seed, const SimOptions& options = {});

/// Same noise draws as simulate(), stored as z_t = A^{-t} x_t through
/// z_t = z_{t-1} + A^{-t}(eta_t + B U_{t-1}); never forms x_t.
Trajectory simulate_scaled(const SystemSpec& spec, const NoiseModel& noise, int horizon,
                           std::uint64_t seed);

/// x_t = A^t z_t for a scaled trajectory (only sensible for moderate T).
Matrix unscaled_states(const Trajectory& scaled, const Matrix& a);

/// max_t ||X_{t+1} - A X_t - B U_t - eta_{t+1}|| / max(1, max_t ||X_t||).
double recurrence_residual(const Trajectory& traj, const SystemSpec& spec);

/// [[A, B], [0, 0]], the state matrix of the input-augmented process.
Matrix augment_control(const Matrix& a, const Matrix& b);

/// Seeded Gaussian matrix with singular values replaced by a geometric ladder
/// from 1 down to 1/conditioning, so its condition number equals `conditioning`.
Matrix random_conditioned_matrix(int d, double conditioning, std::uint64_t seed);

/// Seeded Gaussian matrix rescaled to spectral radius `rho`.
Matrix random_matrix_with_radius(int d, double rho, std::uint64_t seed);

SystemSpec build_composite(const std::vector<CompositeBlock>& blocks, const Matrix& similarity);
SystemSpec build_composite(const std::vector<CompositeBlock>& blocks, std::uint64_t similarity_seed,
                           double conditioning);

}  // namespace sysid
