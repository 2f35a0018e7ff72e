#include <crase/oracle.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

namespace crase {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double relative_delta(double value, double reference) {
  const double diff = std::abs(value - reference);
  return std::abs(reference) > 1e-12 ? diff / std::abs(reference) : diff;
}

}  // namespace

// -- configuration ------------------------------------------------------------

Index OracleConfig::steps() const { return static_cast<Index>(std::llround(t_region / dt)); }

std::vector<std::string> OracleConfig::validate() const {
  rates.validate();
  if (m_oscillators < 3 || m_oscillators % 2 == 0) {
    throw InvalidArgument("m_oscillators must be an odd integer >= 3");
  }
  if (!(delta_max > 0) || !(dt > 0) || !(t_region > 0) || !(mode_sigma > 0) || !(mode_center > 0)) {
    throw InvalidArgument("delta_max, dt, t_region, mode_sigma and mode_center must be positive");
  }
  const double reach = TemporalMode::kTruncation * mode_sigma;
  if (mode_center + reach > t_region) {
    throw InvalidArgument("mode_center + 5*mode_sigma must not exceed t_region");
  }
  if (mode_center - reach < 0) {
    throw InvalidArgument("mode_center - 5*mode_sigma must be >= 0 (mode may not straddle the pi-pulse)");
  }
  if (steps() < 2) throw InvalidArgument("t_region must span at least two time steps");

  std::vector<std::string> warnings;
  const double max_rate = std::max({rates.gamma_b1, rates.gamma_a1, rates.gamma_b2, rates.gamma_a2});
  if (delta_max < 10.0 * max_rate) {
    warnings.push_back("delta_max = " + fmt(delta_max) + " is below 10x the largest rate (" +
                       fmt(10.0 * max_rate) + "); atomic band may not look flat to the cavity");
  }
  const double net1 = rates.gamma_b1 - rates.gamma_a1;
  const double total2 = rates.gamma_b2 + rates.gamma_a2;
  if (1.0 / mode_sigma > 0.2 * std::min(net1, total2)) {
    warnings.push_back("temporal mode is not narrowband: 1/mode_sigma = " + fmt(1.0 / mode_sigma) +
                       " exceeds 0.2*min(gamma_b1-gamma_a1, gamma_b2+gamma_a2) = " +
                       fmt(0.2 * std::min(net1, total2)));
  }
  if (dt > 0.1 / delta_max * (1.0 + 1e-9)) {
    warnings.push_back("dt = " + fmt(dt) + " exceeds 0.1/delta_max = " + fmt(0.1 / delta_max) +
                       "; fastest atomic rotation is under-resolved");
  }
  if (t_region - (mode_center + reach) < 5.0 / net1) {
    warnings.push_back("mode support lies within 5/(gamma_b1-gamma_a1) of the region start; "
                       "initial transients may leak into the mode");
  }
  const double spacing = 2.0 * delta_max / (m_oscillators - 1);
  if (2.0 * kPi / spacing <= t_region) {
    warnings.push_back("detuning spacing " + fmt(spacing) + " revives the atomic field after " +
                       fmt(2.0 * kPi / spacing) + " < t_region");
  }
  return warnings;
}

DetuningGrid build_grid(const OracleConfig& config) {
  const int m = config.m_oscillators;
  if (m < 3) throw InvalidArgument("build_grid: need at least 3 oscillators");
  if (!(config.delta_max > 0)) throw InvalidArgument("build_grid: delta_max must be positive");
  DetuningGrid grid;
  grid.spacing = 2.0 * config.delta_max / (m - 1);
  grid.detuning.resize(m);
  for (int j = 0; j < m; ++j) grid.detuning(j) = -config.delta_max + j * grid.spacing;
  grid.coupling1 = Eigen::VectorXd::Constant(m, std::sqrt(config.rates.gamma_a1 * grid.spacing / (2.0 * kPi)));
  grid.coupling2 = Eigen::VectorXd::Constant(m, std::sqrt(config.rates.gamma_a2 * grid.spacing / (2.0 * kPi)));
  return grid;
}

// -- coefficient algebra --------------------------------------------------------

OperatorCoefficients OperatorCoefficients::dagger() const {
  OperatorCoefficients d(basis);
  d.alpha = beta.conjugate();
  d.beta = alpha.conjugate();
  return d;
}

double OperatorCoefficients::commutator() const { return alpha.squaredNorm() - beta.squaredNorm(); }

namespace {

void require_same_basis(const OperatorCoefficients& x, const OperatorCoefficients& y) {
  if (!(x.basis == y.basis) || x.alpha.size() != y.alpha.size()) {
    throw InvalidArgument("operators are expanded over different input bases");
  }
}

}  // namespace

Complex expect_dagger_product(const OperatorCoefficients& x, const OperatorCoefficients& y) {
  require_same_basis(x, y);
  return x.beta.dot(y.beta);  // dot() conjugates the left operand
}

Complex expect_product(const OperatorCoefficients& x, const OperatorCoefficients& y) {
  require_same_basis(x, y);
  return (x.alpha.array() * y.beta.array()).sum();
}

double coefficient_overlap(const OperatorCoefficients& x, const OperatorCoefficients& y) {
  require_same_basis(x, y);
  const Complex inner = x.alpha.dot(y.alpha) + x.beta.dot(y.beta);
  const double nx = std::sqrt(x.alpha.squaredNorm() + x.beta.squaredNorm());
  const double ny = std::sqrt(y.alpha.squaredNorm() + y.beta.squaredNorm());
  if (nx == 0 || ny == 0) return 0.0;
  return std::abs(inner) / (nx * ny);
}

// -- temporal modes ------------------------------------------------------------

double TemporalMode::shape(double t) const {
  const double u = std::abs(t) - center;
  if (std::abs(u) > kTruncation * sigma) return 0.0;
  return std::exp(-u * u / (2.0 * sigma * sigma));
}

ModeWeights mode_weights(const OracleConfig& config, bool region2) {
  const Index n = config.steps();
  const double dt = config.dt;
  const double t0 = region2 ? 0.0 : -static_cast<double>(n) * dt;
  const TemporalMode mode{config.mode_center, config.mode_sigma};

  ModeWeights w;
  w.bin.resize(n);
  w.node.resize(n + 1);
  double norm2 = 0.0;
  for (Index k = 0; k < n; ++k) {
    w.bin(k) = mode.shape(t0 + (static_cast<double>(k) + 0.5) * dt) * std::sqrt(dt);
    norm2 += w.bin(k) * w.bin(k);
  }
  for (Index k = 0; k <= n; ++k) {
    const double trap = (k == 0 || k == n) ? 0.5 * dt : dt;
    w.node(k) = trap * mode.shape(t0 + static_cast<double>(k) * dt);
  }
  if (!(norm2 > 0)) throw InvalidArgument("temporal mode has no support on the time grid");
  const double scale = 1.0 / std::sqrt(norm2);
  w.bin *= scale;
  w.node *= scale;
  return w;
}

// -- forward route ---------------------------------------------------------------

OperatorCoefficients CoefficientState::row(Index r) const {
  OperatorCoefficients x(basis);
  x.alpha = alpha.row(r).transpose();
  x.beta = beta.row(r).transpose();
  return x;
}

double CoefficientState::cavity_commutator() const {
  return alpha.row(0).squaredNorm() - beta.row(0).squaredNorm();
}

CoefficientState initial_state(const OracleConfig& config, const DetuningGrid& grid) {
  const Index n = config.steps();
  CoefficientState s;
  s.basis = InputBasis{grid.size(), n, n};
  s.frame = AtomFrame::inverted;
  s.time = -static_cast<double>(n) * config.dt;
  const Index rows = 1 + grid.size();
  s.alpha = Eigen::MatrixXcd::Zero(rows, s.basis.size());
  s.beta = Eigen::MatrixXcd::Zero(rows, s.basis.size());
  s.alpha(0, InputBasis::cavity()) = 1.0;
  for (Index j = 0; j < grid.size(); ++j) s.alpha(1 + j, s.basis.atom(j)) = 1.0;
  return s;
}

namespace {

struct Rows {
  Eigen::MatrixXcd alpha;
  Eigen::MatrixXcd beta;
};

// Time derivative of all rows. `inverted` selects the region-1 equations.
Rows forward_derivative(const Rows& x, bool inverted, double gamma_b, const Eigen::VectorXd& detuning,
                        const Eigen::VectorXd& coupling, Index input_column, double input_gain) {
  const Index m = detuning.size();
  Rows d{Eigen::MatrixXcd(x.alpha.rows(), x.alpha.cols()), Eigen::MatrixXcd(x.beta.rows(), x.beta.cols())};
  const Eigen::VectorXcd g = coupling.cast<Complex>();
  const Complex i(0.0, 1.0);
  auto atoms_a = x.alpha.bottomRows(m);
  auto atoms_b = x.beta.bottomRows(m);
  if (inverted) {
    d.alpha.row(0) = -0.5 * gamma_b * x.alpha.row(0) - g.transpose() * atoms_b.conjugate();
    d.beta.row(0) = -0.5 * gamma_b * x.beta.row(0) - g.transpose() * atoms_a.conjugate();
    const Eigen::VectorXcd rot = i * detuning.cast<Complex>();
    d.alpha.bottomRows(m) = rot.asDiagonal() * atoms_a - g * x.beta.row(0).conjugate();
    d.beta.bottomRows(m) = rot.asDiagonal() * atoms_b - g * x.alpha.row(0).conjugate();
  } else {
    d.alpha.row(0) = -0.5 * gamma_b * x.alpha.row(0) - g.transpose() * atoms_a;
    d.beta.row(0) = -0.5 * gamma_b * x.beta.row(0) - g.transpose() * atoms_b;
    const Eigen::VectorXcd rot = -i * detuning.cast<Complex>();
    d.alpha.bottomRows(m) = rot.asDiagonal() * atoms_a + g * x.alpha.row(0);
    d.beta.bottomRows(m) = rot.asDiagonal() * atoms_b + g * x.beta.row(0);
  }
  d.alpha(0, input_column) += input_gain;
  return d;
}

void rk4_forward(CoefficientState& state, bool inverted, double gamma_b, const DetuningGrid& grid,
                 const Eigen::VectorXd& coupling, Index input_column, double dt) {
  const double gain = -std::sqrt(gamma_b) / std::sqrt(dt);
  Rows y{state.alpha, state.beta};
  auto f = [&](const Rows& x) {
    return forward_derivative(x, inverted, gamma_b, grid.detuning, coupling, input_column, gain);
  };
  const Rows k1 = f(y);
  const Rows k2 = f({y.alpha + 0.5 * dt * k1.alpha, y.beta + 0.5 * dt * k1.beta});
  const Rows k3 = f({y.alpha + 0.5 * dt * k2.alpha, y.beta + 0.5 * dt * k2.beta});
  const Rows k4 = f({y.alpha + dt * k3.alpha, y.beta + dt * k3.beta});
  state.alpha += dt / 6.0 * (k1.alpha + 2.0 * k2.alpha + 2.0 * k3.alpha + k4.alpha);
  state.beta += dt / 6.0 * (k1.beta + 2.0 * k2.beta + 2.0 * k3.beta + k4.beta);
  state.time += dt;
}

}  // namespace

void region1_step(CoefficientState& state, const OracleConfig& config, const DetuningGrid& grid, Index bin) {
  if (state.frame != AtomFrame::inverted) throw InvalidArgument("region1_step needs inverted atoms");
  rk4_forward(state, true, config.rates.gamma_b1, grid, grid.coupling1, state.basis.bin1(bin), config.dt);
}

void region2_step(CoefficientState& state, const OracleConfig& config, const DetuningGrid& grid, Index bin) {
  if (state.frame != AtomFrame::ground) throw InvalidArgument("region2_step needs ground-state atoms");
  rk4_forward(state, false, config.rates.gamma_b2, grid, grid.coupling2, state.basis.bin2(bin), config.dt);
}

Region1Result region1_propagate(const OracleConfig& config, const DetuningGrid& grid) {
  config.validate();
  const Index n = config.steps();
  const ModeWeights w = mode_weights(config, false);
  const double root_gamma = std::sqrt(config.rates.gamma_b1);

  CoefficientState state = initial_state(config, grid);
  OperatorCoefficients ase(state.basis);
  double worst = 0.0;
  auto accumulate_cavity = [&](Index node) {
    const double weight = -root_gamma * w.node(node);
    if (weight != 0.0) {
      ase.alpha += weight * state.alpha.row(0).transpose();
      ase.beta += weight * state.beta.row(0).transpose();
    }
    worst = std::max(worst, std::abs(state.cavity_commutator() - 1.0));
  };

  accumulate_cavity(0);
  for (Index k = 0; k < n; ++k) {
    ase.alpha(state.basis.bin1(k)) += -w.bin(k);
    region1_step(state, config, grid, k);
    accumulate_cavity(k + 1);
  }
  state.time = 0.0;
  return {std::move(state), std::move(ase), worst};
}

CoefficientState pi_pulse_flip(CoefficientState state) {
  // Atomic operators carry over unchanged (s_j(0) -> d_j(0)); only the sign of
  // their free rotation changes, which is what AtomFrame::ground selects.
  state.frame = AtomFrame::ground;
  return state;
}

Region2Result region2_propagate(const OracleConfig& config, const DetuningGrid& grid, CoefficientState state) {
  config.validate();
  if (state.frame != AtomFrame::ground) throw InvalidArgument("region2_propagate expects a flipped state");
  const Index n = config.steps();
  const ModeWeights w = mode_weights(config, true);
  const double root_gamma = std::sqrt(config.rates.gamma_b2);

  OperatorCoefficients rase(state.basis);
  double worst = 0.0;
  auto accumulate_cavity = [&](Index node) {
    const double weight = root_gamma * w.node(node);
    if (weight != 0.0) {
      rase.alpha += weight * state.alpha.row(0).transpose();
      rase.beta += weight * state.beta.row(0).transpose();
    }
    worst = std::max(worst, std::abs(state.cavity_commutator() - 1.0));
  };

  accumulate_cavity(0);
  for (Index k = 0; k < n; ++k) {
    rase.alpha(state.basis.bin2(k)) += w.bin(k);
    region2_step(state, config, grid, k);
    accumulate_cavity(k + 1);
  }
  return {std::move(state), std::move(rase), worst};
}

// -- reverse route ------------------------------------------------------------------

namespace {

// Pulls a batch of linear functionals X = Σ_n f_n·a(t_n) + φᵀ y(t_end) back
// through one region. y is (a, s_1†, ..., s_M†) in region 1 and
// (a, d_1, ..., d_M) in region 2; in both cases the dynamics are complex
// linear in y,
//
//   dy/dt = D y + e_0 (-√γb) b_in,   D = [[-γb/2, σ g 1ᵀ], [∓g 1, diag(-iΔ)]]ᵀ-wise,
//
// so the exact transpose of the RK4 step propagates λ = ∂X/∂y backwards:
//   λ_n = Pᵀ λ_{n+1} + f_n e_0,   P = Σ_{k≤4} (hD)^k / k!.
// Dᵀ has the arrow form (Dᵀv)_0 = -γb/2 v_0 + σ g Σ_j v_j,
// (Dᵀv)_j = -g v_0 - iΔ_j v_j with σ = -1 (region 1) or +1 (region 2).
// The cavity entries of the four Krylov vectors (hDᵀ)^k λ only need the
// detuning moments Σ_j (-iΔ_j)^k λ_j, k ≤ 3, so each step is one fused pass
// over the atoms per functional.
class AdjointPass {
public:
  AdjointPass(const DetuningGrid& grid, double coupling, double gamma_b, bool region2, double dt)
      : m_(grid.size()),
        h_(dt),
        g_(coupling),
        sign_(region2 ? 1.0 : -1.0),
        half_gamma_(0.5 * gamma_b),
        input_gain_(-std::sqrt(gamma_b) / std::sqrt(dt)),
        hd_(grid.detuning * dt),
        delta_(grid.detuning) {
    for (Index j = 0; j < m_; ++j) {
      const Complex r(0.0, -delta_(j));
      t1_ += r;
      t2_ += r * r;
    }
  }

  struct Result {
    Eigen::MatrixXcd initial;  // ∂X/∂y(t_start), (M+1) x k
    Eigen::MatrixXcd bins;     // coefficient of each b_in bin, n x k
  };

  /// `terminal`: (M+1) x k, `cavity_weights`: (n+1) x k.
  Result run(const Eigen::MatrixXcd& terminal, const Eigen::MatrixXcd& cavity_weights, double growth_bound) const {
    const Index n = cavity_weights.rows() - 1;
    const Index k = terminal.cols();
    Result out;
    out.bins.resize(n, k);
    out.initial.resize(m_ + 1, k);
    for (Index c = 0; c < k; ++c) run_column(terminal.col(c), cavity_weights.col(c), growth_bound, out, c);
    return out;
  }

private:
  void run_column(const Eigen::VectorXcd& terminal, const Eigen::VectorXcd& weights, double growth_bound,
                  Result& out, Index col) const {
    const Index n = weights.size() - 1;
    const double h = h_;
    const double hg = h * g_;
    const double md = static_cast<double>(m_);

    std::vector<double> re(m_), im(m_);
    for (Index j = 0; j < m_; ++j) {
      re[j] = terminal(1 + j).real();
      im[j] = terminal(1 + j).imag();
    }
    Complex cav = terminal(0) + weights(n);
    std::array<Complex, 4> mom{};
    moments(re, im, mom);

    double source = terminal.norm();
    for (Index s = 0; s <= n; ++s) source += std::abs(weights(s));
    const double limit = std::max(1.0, source) * growth_bound;

    for (Index step = n - 1; step >= 0; --step) {
      // Cavity entries of v_k = (hDᵀ)^(k-1) λ.
      const Complex p1 = cav;
      const Complex p2 = h * (sign_ * g_ * mom[0] - half_gamma_ * p1);
      const Complex sum2 = h * (-g_ * md * p1 + mom[1]);
      const Complex p3 = h * (sign_ * g_ * sum2 - half_gamma_ * p2);
      const Complex sum3 = -hg * md * p2 + h * h * (-g_ * p1 * t1_ + mom[2]);
      const Complex p4 = h * (sign_ * g_ * sum3 - half_gamma_ * p3);
      const Complex sum4 = -hg * md * p3 - h * hg * p2 * t1_ + h * h * h * (-g_ * p1 * t2_ + mom[3]);
      const Complex p5 = h * (sign_ * g_ * sum4 - half_gamma_ * p4);

      out.bins(step, col) = input_gain_ * h * (p1 + p2 / 2.0 + p3 / 6.0 + p4 / 24.0);
      cav = p1 + p2 + p3 / 2.0 + p4 / 6.0 + p5 / 24.0 + weights(step);

      // Atom entries: v_{k+1,j} = -hg p_k + h(-iΔ_j) v_{k,j}.
      const double a1r = -hg * p1.real(), a1i = -hg * p1.imag();
      const double a2r = -hg * p2.real(), a2i = -hg * p2.imag();
      const double a3r = -hg * p3.real(), a3i = -hg * p3.imag();
      const double a4r = -hg * p4.real(), a4i = -hg * p4.imag();
      double m0r = 0, m0i = 0, m1r = 0, m1i = 0, m2r = 0, m2i = 0, m3r = 0, m3i = 0;
      for (Index j = 0; j < m_; ++j) {
        const double x = hd_(j);
        const double lr = re[j], li = im[j];
        // multiply by h(-iΔ): (u, w) -> (x w, -x u)
        const double v2r = a1r + x * li, v2i = a1i - x * lr;
        const double v3r = a2r + x * v2i, v3i = a2i - x * v2r;
        const double v4r = a3r + x * v3i, v4i = a3i - x * v3r;
        const double v5r = a4r + x * v4i, v5i = a4i - x * v4r;
        const double nr = lr + v2r + v3r / 2.0 + v4r / 6.0 + v5r / 24.0;
        const double ni = li + v2i + v3i / 2.0 + v4i / 6.0 + v5i / 24.0;
        re[j] = nr;
        im[j] = ni;
        const double d = delta_(j);
        const double d2 = d * d;
        m0r += nr;
        m0i += ni;
        m1r += d * ni;       // (-iΔ) λ
        m1i -= d * nr;
        m2r -= d2 * nr;      // (-iΔ)² λ = -Δ² λ
        m2i -= d2 * ni;
        m3r -= d2 * d * ni;  // (-iΔ)³ λ = iΔ³ λ
        m3i += d2 * d * nr;
      }
      mom = {Complex(m0r, m0i), Complex(m1r, m1i), Complex(m2r, m2i), Complex(m3r, m3i)};

      if (step % 512 == 0) {
        const double norm = std::abs(cav) + std::sqrt(std::abs(mom[0]) + squared_norm(re, im));
        if (!std::isfinite(norm)) throw StepSizeError("coefficients became non-finite; reduce dt");
        if (norm > limit) {
          throw StepSizeError("coefficient norm " + fmt(norm) + " exceeded the stability bound " + fmt(limit) +
                              "; reduce dt");
        }
      }
    }
    out.initial(0, col) = cav;
    for (Index j = 0; j < m_; ++j) out.initial(1 + j, col) = Complex(re[j], im[j]);
  }

  void moments(const std::vector<double>& re, const std::vector<double>& im, std::array<Complex, 4>& mom) const {
    mom = {};
    for (Index j = 0; j < m_; ++j) {
      const Complex l(re[j], im[j]);
      const Complex r(0.0, -delta_(j));
      mom[0] += l;
      mom[1] += r * l;
      mom[2] += r * r * l;
      mom[3] += r * r * r * l;
    }
  }

  static double squared_norm(const std::vector<double>& re, const std::vector<double>& im) {
    double s = 0;
    for (std::size_t j = 0; j < re.size(); ++j) s += re[j] * re[j] + im[j] * im[j];
    return s;
  }

  Index m_;
  double h_;
  double g_;
  double sign_;
  double half_gamma_;
  double input_gain_;
  Eigen::VectorXd hd_;
  Eigen::VectorXd delta_;
  Complex t1_{0.0};
  Complex t2_{0.0};
};

// Region-1 pullback column -> coefficients over the full basis.
void add_region1(OperatorCoefficients& x, const AdjointPass::Result& r, Index col, Complex scale = 1.0) {
  const InputBasis& b = x.basis;
  x.alpha(InputBasis::cavity()) += scale * r.initial(0, col);
  for (Index j = 0; j < b.n_atoms; ++j) x.beta(b.atom(j)) += scale * r.initial(1 + j, col);
  for (Index s = 0; s < b.n_bins1; ++s) x.alpha(b.bin1(s)) += scale * r.bins(s, col);
}

}  // namespace

// -- moments --------------------------------------------------------------------------

double AnalyticDeltas::max() const {
  double m = std::max({n_ase, n_rase, cross_ab, efficiency});
  for (double d : duan) m = std::max(m, d);
  return m;
}

double OracleReport::duan_sum_at(double theta) const {
  return duan_sum(Covariance(covariance, 1e-2), theta);
}

DuanResult<double> OracleReport::minimize_duan() const {
  return crase::minimize_duan(Covariance(covariance, 1e-2));
}

OracleReport filtered_moments(const OperatorCoefficients& a_mode, const OperatorCoefficients& b_mode) {
  require_same_basis(a_mode, b_mode);
  OracleReport r;
  r.n_ase = expect_dagger_product(a_mode, a_mode).real();
  r.n_rase = expect_dagger_product(b_mode, b_mode).real();
  const Complex cross = expect_product(a_mode, b_mode);
  r.cross_ab = cross.real();
  r.cross_ab_imag = cross.imag();
  if (r.n_ase > 1e-12) r.efficiency = r.n_rase / r.n_ase;
  r.commutator_a = a_mode.commutator() - 1.0;
  r.commutator_b = b_mode.commutator() - 1.0;
  r.commutator_ab = std::abs(expect_product(a_mode, b_mode) - expect_product(b_mode, a_mode));

  // Quadrature R_i = Σ_k u_ik c_k + h.c.; symmetrized vacuum moments are Re Σ_k u_ik conj(u_jk).
  const Index size = a_mode.alpha.size();
  Eigen::MatrixXcd u(size, 4);
  const double root_half = std::sqrt(0.5);
  const Complex i(0.0, 1.0);
  u.col(0) = root_half * (a_mode.alpha + a_mode.beta.conjugate());
  u.col(1) = -i * root_half * (a_mode.alpha - a_mode.beta.conjugate());
  u.col(2) = root_half * (b_mode.alpha + b_mode.beta.conjugate());
  u.col(3) = -i * root_half * (b_mode.alpha - b_mode.beta.conjugate());
  const Eigen::MatrixXd v = (u.transpose() * u.conjugate()).real();
  r.covariance = (v + v.transpose()) / 2.0;
  return r;
}

AnalyticDeltas analytic_deltas(const OracleReport& report, const SqueezeParams& params) {
  const CraseMoments ref = crase_moments(params);
  AnalyticDeltas d;
  d.n_ase = relative_delta(report.n_ase, ref.n_ase);
  d.n_rase = relative_delta(report.n_rase, ref.n_rase);
  d.cross_ab = relative_delta(report.cross_ab, ref.cross_ab);
  d.efficiency = (report.efficiency && ref.n_ase > 1e-12) ? relative_delta(*report.efficiency, ref.efficiency) : 0.0;
  for (std::size_t k = 0; k < kDeltaThetas.size(); ++k) {
    d.duan[k] = relative_delta(report.duan_sum_at(kDeltaThetas[k]), duan_sum_closed(params, kDeltaThetas[k]));
  }
  return d;
}

// -- pipeline ---------------------------------------------------------------------------

OracleReport run_oracle(const OracleConfig& config) {
  std::vector<std::string> warnings = config.validate();
  const SqueezeParams params = squeeze_params(config.rates);
  const DetuningGrid grid = build_grid(config);
  const Index n = config.steps();
  const Index m = grid.size();
  const double dt = config.dt;
  const InputBasis basis{m, n, n};
  const ModeWeights w1 = mode_weights(config, false);
  const ModeWeights w2 = mode_weights(config, true);
  const RateParams& rates = config.rates;
  const double gain = std::cosh(params.chi) + std::sinh(params.chi);
  const double growth_bound = 10.0 * (1.0 + gain * gain);
  const Index mid = n / 2;

  // Region 2: B and a probe of a(T/2).
  enum Col2 { kB, kProbe2, kCols2 };
  Eigen::MatrixXcd weights2 = Eigen::MatrixXcd::Zero(n + 1, kCols2);
  weights2.col(kB) = std::sqrt(rates.gamma_b2) * w2.node.cast<Complex>();
  weights2(mid, kProbe2) = 1.0;
  const AdjointPass pass2(grid, grid.coupling2(0), rates.gamma_b2, true, dt);
  const AdjointPass::Result r2 = pass2.run(Eigen::MatrixXcd::Zero(m + 1, kCols2), weights2, growth_bound);

  // Recalled-atom mode D = ∫ g(t) d_in(t) dt = Σ_j c_j d_j(0).
  const double density = std::sqrt(grid.spacing / (2.0 * kPi));
  Eigen::VectorXcd recall(m);
  Eigen::VectorXcd emit(m);  // s_in mode weights for S
  for (Index j = 0; j < m; ++j) {
    const Complex back = std::polar(1.0, -grid.detuning(j) * dt);
    const Complex fwd = std::conj(back);
    Complex phase_back = 1.0;
    Complex phase_fwd = 1.0;  // region 1: phase of t_n - t0 = n dt
    Complex c_recall = 0.0;
    Complex c_emit = 0.0;
    for (Index s = 0; s <= n; ++s) {
      c_recall += w2.node(s) * phase_back;
      c_emit += w1.node(s) * phase_fwd;
      phase_back *= back;
      phase_fwd *= fwd;
    }
    recall(j) = density * c_recall;
    emit(j) = density * c_emit;
  }

  // Region 1.
  enum Col1 { kA, kZ, kDconj, kBcav, kBatoms, kP2cav, kP2atoms, kProbeMid, kProbeEnd, kCols1 };
  Eigen::MatrixXcd terminal1 = Eigen::MatrixXcd::Zero(m + 1, kCols1);
  Eigen::MatrixXcd weights1 = Eigen::MatrixXcd::Zero(n + 1, kCols1);
  weights1.col(kA) = -std::sqrt(rates.gamma_b1) * w1.node.cast<Complex>();
  weights1.col(kZ) = w1.node.cast<Complex>();
  terminal1.col(kDconj).tail(m) = recall.conjugate();
  terminal1(0, kBcav) = r2.initial(0, kB);
  terminal1.col(kBatoms).tail(m) = r2.initial.col(kB).tail(m).conjugate();
  terminal1(0, kP2cav) = r2.initial(0, kProbe2);
  terminal1.col(kP2atoms).tail(m) = r2.initial.col(kProbe2).tail(m).conjugate();
  weights1(mid, kProbeMid) = 1.0;
  terminal1(0, kProbeEnd) = 1.0;
  const AdjointPass pass1(grid, grid.coupling1(0), rates.gamma_b1, false, dt);
  const AdjointPass::Result r1 = pass1.run(terminal1, weights1, growth_bound);

  auto region1_functional = [&](Index col) {
    OperatorCoefficients x(basis);
    add_region1(x, r1, col);
    return x;
  };
  auto region2_functional = [&](Index col2, Index cav_col, Index atom_col) {
    OperatorCoefficients x = region1_functional(cav_col);
    OperatorCoefficients atoms = region1_functional(atom_col).dagger();
    x.alpha += atoms.alpha;
    x.beta += atoms.beta;
    for (Index s = 0; s < n; ++s) x.alpha(basis.bin2(s)) += r2.bins(s, col2);
    return x;
  };

  OperatorCoefficients a_mode = region1_functional(kA);
  for (Index s = 0; s < n; ++s) a_mode.alpha(basis.bin1(s)) += -w1.bin(s);

  OperatorCoefficients b_mode = region2_functional(kB, kBcav, kBatoms);
  for (Index s = 0; s < n; ++s) b_mode.alpha(basis.bin2(s)) += w2.bin(s);

  // Region-1 atomic output mode via s_out = s_in - √γa1 a†.
  OperatorCoefficients s_mode = region1_functional(kZ).dagger();
  s_mode.alpha *= -std::sqrt(rates.gamma_a1);
  s_mode.beta *= -std::sqrt(rates.gamma_a1);
  for (Index j = 0; j < m; ++j) s_mode.alpha(basis.atom(j)) += emit(j);

  const OperatorCoefficients d_mode = region1_functional(kDconj).dagger();

  OracleReport report = filtered_moments(a_mode, b_mode);
  report.rephasing_overlap = coefficient_overlap(s_mode, d_mode);
  report.n_atomic_output = expect_dagger_product(s_mode, s_mode).real();
  const std::array<double, 3> probes{region1_functional(kProbeMid).commutator(),
                                     region1_functional(kProbeEnd).commutator(),
                                     region2_functional(kProbe2, kP2cav, kP2atoms).commutator()};
  for (double c : probes) report.cavity_commutator_error = std::max(report.cavity_commutator_error, std::abs(c - 1.0));
  report.warnings = std::move(warnings);
  report.analytic_deltas = analytic_deltas(report, params);
  return report;
}

// -- refinement ----------------------------------------------------------------------------

OracleConfig refine(const OracleConfig& base, int level) {
  if (level < 0) throw InvalidArgument("refinement level must be non-negative");
  OracleConfig c = base;
  if (level == 0) return c;
  const double r = std::pow(2.0, level);
  const double r_band = std::pow(2.0, 0.25 * level);
  c.mode_sigma = base.mode_sigma * r;
  c.mode_center = base.mode_center * r;
  c.t_region = base.t_region * r;
  c.delta_max = base.delta_max * r_band;
  c.dt = base.dt / r_band;
  const double base_spacing = 2.0 * base.delta_max / (base.m_oscillators - 1);
  const double spacing = base_spacing / r;
  long intervals = std::lround(2.0 * c.delta_max / spacing);
  if (intervals % 2 != 0) ++intervals;
  c.m_oscillators = static_cast<int>(intervals + 1);
  return c;
}

bool ConvergenceTable::monotone() const {
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const AnalyticDeltas& prev = levels[k - 1].report.analytic_deltas;
    const AnalyticDeltas& cur = levels[k].report.analytic_deltas;
    auto ok = [](double before, double after) { return after <= before + kNoiseFloor; };
    if (!ok(prev.n_ase, cur.n_ase) || !ok(prev.n_rase, cur.n_rase) || !ok(prev.cross_ab, cur.cross_ab) ||
        !ok(prev.efficiency, cur.efficiency)) {
      return false;
    }
    for (std::size_t t = 0; t < prev.duan.size(); ++t) {
      if (!ok(prev.duan[t], cur.duan[t])) return false;
    }
  }
  return true;
}

ConvergenceTable convergence_study(const OracleConfig& config, int levels, int jobs) {
  if (levels < 2) throw InvalidArgument("convergence_study needs at least 2 levels");
  ConvergenceTable table;
  table.levels.resize(levels);
  for (int l = 0; l < levels; ++l) {
    table.levels[l].level = l;
    table.levels[l].config = refine(config, l);
    table.levels[l].config.validate();
  }

  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(levels);
  auto worker = [&] {
    for (int l = next++; l < levels; l = next++) {
      try {
        ConvergenceLevel& lvl = table.levels[l];
        lvl.report = run_oracle(lvl.config);
        lvl.regime_flagged = !lvl.report.warnings.empty();
      } catch (...) {
        errors[l] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, levels);
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return table;
}

}  // namespace crase
