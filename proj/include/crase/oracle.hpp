#pragma once

// Time-domain Heisenberg-Langevin model of the two-region protocol, solved
// without adiabatic elimination of the cavity.
//
// The inhomogeneously broadened atoms are a uniform grid of M oscillators
// with detunings Δ_j in [-Δmax, Δmax] and flat couplings
// g_j = √(γa δΔ / 2π). Every Heisenberg operator is tracked as a linear
// combination of elementary inputs
//
//   basis = { a(t0), s_j(t0) for all j, b_in bins of region 1, b_in bins of region 2 }
//
// split into annihilator (alpha) and creator (beta) coefficients. Each
// b_in bin is a unit-commutator mode; the field over a step is bin/√dt.
//
// Region 1 (t0 = -T to 0, inverted atoms):
//   da/dt   = -(γb1/2) a - √γb1 b_in - Σ_j g_j s_j†
//   ds_j/dt = +iΔ_j s_j - g_j a†
// π-pulse at t = 0: s_j -> d_j, cavity untouched.
// Region 2 (0 to T, ground-state atoms):
//   da/dt   = -(γb2/2) a - √γb2 b_in - Σ_j g_j d_j
//   dd_j/dt = -iΔ_j d_j + g_j a
//
// Signs reproduce the region-1 solutions for s(Δ,t) and a(t) and the
// region-2 Hamiltonian; a global phase on the atoms is unobservable in every
// reported moment.
//
// Two propagation routes produce the same coefficient vectors:
//   * forward: the full CoefficientState (every row over the whole basis) is
//     stepped with RK4. Cost grows as rows x basis x steps, so this is for
//     small grids and cross-checks.
//   * reverse: each output functional (A, B, probes) is pulled back through
//     the transposed RK4 step. Cost is O(M) per step per functional; this is
//     what run_oracle uses.

#include <crase/analytic.hpp>
#include <crase/gaussian.hpp>

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace crase {

using Complex = std::complex<double>;

struct OracleConfig {
  RateParams rates{};
  int m_oscillators{1841};
  double delta_max{10.0};
  double dt{0.01};
  double t_region{460.0};
  double mode_sigma{45.0};   // amplitude std of the Gaussian temporal mode
  double mode_center{226.0}; // |t| of the mode peak

  /// Throws InvalidArgument on hard violations; returns regime warnings.
  std::vector<std::string> validate() const;

  /// Steps per region (t_region is rounded to a whole number of steps).
  Index steps() const;
};

struct DetuningGrid {
  Eigen::VectorXd detuning;
  double spacing{0.0};
  Eigen::VectorXd coupling1;
  Eigen::VectorXd coupling2;

  Index size() const { return detuning.size(); }
};

DetuningGrid build_grid(const OracleConfig& config);

/// Index layout of the elementary input basis.
struct InputBasis {
  Index n_atoms{0};
  Index n_bins1{0};
  Index n_bins2{0};

  Index size() const { return 1 + n_atoms + n_bins1 + n_bins2; }
  static constexpr Index cavity() { return 0; }
  Index atom(Index j) const { return 1 + j; }
  Index bin1(Index n) const { return 1 + n_atoms + n; }
  Index bin2(Index n) const { return 1 + n_atoms + n_bins1 + n; }

  bool operator==(const InputBasis&) const = default;
};

/// X = Σ_k alpha_k c_k + beta_k c_k† over an InputBasis.
struct OperatorCoefficients {
  InputBasis basis;
  Eigen::VectorXcd alpha;
  Eigen::VectorXcd beta;

  explicit OperatorCoefficients(const InputBasis& b)
      : basis(b), alpha(Eigen::VectorXcd::Zero(b.size())), beta(Eigen::VectorXcd::Zero(b.size())) {}

  OperatorCoefficients dagger() const;
  /// [X, X†] = Σ|α|² - Σ|β|².
  double commutator() const;
};

/// Vacuum expectation values over the elementary inputs.
Complex expect_dagger_product(const OperatorCoefficients& x, const OperatorCoefficients& y);  // <X† Y>
Complex expect_product(const OperatorCoefficients& x, const OperatorCoefficients& y);         // <X Y>

/// |<x, y>| / (|x| |y|) over the concatenated (alpha, beta) vectors.
double coefficient_overlap(const OperatorCoefficients& x, const OperatorCoefficients& y);

/// Symmetric temporal mode g(t) = g(-t), peaked at |t| = center, truncated at
/// 5 sigma, unit norm over each half line after truncation.
struct TemporalMode {
  double center{226.0};
  double sigma{45.0};

  static constexpr double kTruncation = 5.0;

  /// Unnormalized shape.
  double shape(double t) const;
};

/// Discretized filter weights for one region. Bin weights multiply the b_in bin
/// operators (g at the bin midpoint times √dt); node weights multiply the
/// cavity amplitude on the time nodes (trapezoid rule times g).
struct ModeWeights {
  Eigen::VectorXd bin;
  Eigen::VectorXd node;
};

/// Weights on the region-1 grid t_n = -T + n dt (first) or the region-2 grid
/// t_n = n dt (second).
ModeWeights mode_weights(const OracleConfig& config, bool region2);

enum class AtomFrame { inverted, ground };

/// Full forward state: rows are a (0) and atoms j (1 + j), columns the basis.
struct CoefficientState {
  InputBasis basis;
  AtomFrame frame{AtomFrame::inverted};
  double time{0.0};
  Eigen::MatrixXcd alpha;
  Eigen::MatrixXcd beta;

  OperatorCoefficients row(Index r) const;
  double cavity_commutator() const;
};

struct Region1Result {
  CoefficientState state;             // at t = 0
  OperatorCoefficients ase_mode;      // A
  double max_cavity_commutator_error{0.0};
};

struct Region2Result {
  CoefficientState state;             // at t = T
  OperatorCoefficients rase_mode;     // B
  double max_cavity_commutator_error{0.0};
};

/// Initial state at t0 = -T: a = a(t0), s_j = s_j(t0).
CoefficientState initial_state(const OracleConfig& config, const DetuningGrid& grid);

/// One RK4 step of the region-1 (inverted) or region-2 (ground) dynamics with
/// the b_in bin `bin` held over the step.
void region1_step(CoefficientState& state, const OracleConfig& config, const DetuningGrid& grid, Index bin);
void region2_step(CoefficientState& state, const OracleConfig& config, const DetuningGrid& grid, Index bin);

Region1Result region1_propagate(const OracleConfig& config, const DetuningGrid& grid);
CoefficientState pi_pulse_flip(CoefficientState state);
Region2Result region2_propagate(const OracleConfig& config, const DetuningGrid& grid, CoefficientState state);

struct AnalyticDeltas {
  double n_ase{0.0};
  double n_rase{0.0};
  double cross_ab{0.0};
  double efficiency{0.0};
  std::array<double, 5> duan{};

  double max() const;
};

struct OracleReport {
  double n_ase{0.0};
  double n_rase{0.0};
  double cross_ab{0.0};           // Re <AB>
  double cross_ab_imag{0.0};      // Im <AB>, ideally zero
  std::optional<double> efficiency;
  double commutator_a{0.0};       // [A, A†] - 1
  double commutator_b{0.0};       // [B, B†] - 1
  double commutator_ab{0.0};      // |[A, B]|
  Covariance::Matrix covariance;  // (x_A, p_A, x_B, p_B)

  // Pipeline diagnostics (filled by run_oracle).
  double cavity_commutator_error{0.0};  // max |[a(t), a†(t)] - 1| over probes
  double rephasing_overlap{0.0};
  double n_atomic_output{0.0};          // <S† S> for the region-1 atomic output mode
  AnalyticDeltas analytic_deltas{};
  std::vector<std::string> warnings;

  double duan_sum_at(double theta) const;
  DuanResult<double> minimize_duan() const;
};

/// Thetas at which the Duan functional is compared against the closed form.
inline constexpr std::array<double, 5> kDeltaThetas{0.1, 0.3, 0.5, 0.7, 0.9};

/// Moments of the two filtered modes; throws on basis mismatch.
OracleReport filtered_moments(const OperatorCoefficients& a_mode, const OperatorCoefficients& b_mode);

/// Relative (absolute when the reference is zero) errors against the closed form.
AnalyticDeltas analytic_deltas(const OracleReport& report, const SqueezeParams& params);

/// Reverse-mode pipeline: A, B, the rephasing overlap, atomic output flux and
/// cavity commutator probes. Deterministic.
OracleReport run_oracle(const OracleConfig& config);

/// Config at refinement `level` (level 0 is the input). Each level doubles
/// sigma, mode center and region length (the finite-bandwidth error falls as
/// 1/sigma²), scales Δmax and 1/dt by 2^(1/4), and picks M so the detuning
/// spacing halves and the bath revival time keeps pace with the region.
OracleConfig refine(const OracleConfig& base, int level);

struct ConvergenceLevel {
  int level{0};
  OracleConfig config;
  OracleReport report;
  bool regime_flagged{false};
};

struct ConvergenceTable {
  std::vector<ConvergenceLevel> levels;

  static constexpr double kNoiseFloor = 1e-3;

  /// Every analytic delta is non-increasing from level to level, up to kNoiseFloor.
  bool monotone() const;
};

/// Runs levels 0..levels-1. `jobs` > 1 runs levels concurrently.
ConvergenceTable convergence_study(const OracleConfig& config, int levels, int jobs = 1);

}  // namespace crase
