#pragma once

// Zero-mean Gaussian states of n bosonic modes.
//
// Quadratures are x = (c + c†)/√2 and p = -i(c - c†)/√2, so [x, p] = i and the
// vacuum has variance 1/2 in every quadrature. With this normalization the
// Duan inseparability bound is <Δu²> + <Δv²> < 1 (NOT 2, as in conventions
// with vacuum variance 1). Covariance entries are symmetrized second moments
// V_ij = <R_i R_j + R_j R_i>/2 over R = (x_1, p_1, ..., x_n, p_n).

#include <crase/errors.hpp>
#include <crase/minimize.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace crase {

using Index = Eigen::Index;

struct ModePair {
  Index first{0};
  Index second{1};
};

template <typename Scalar>
class CovarianceMatrix {
public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  static constexpr double kSymmetryTolerance = 1e-12;
  static constexpr double kPhysicalTolerance = 1e-9;

  /// Validates shape, symmetry and the uncertainty relation V + (i/2)Ω ≥ 0.
  /// `physical_tol` is the most negative eigenvalue accepted.
  explicit CovarianceMatrix(Matrix entries, Scalar physical_tol = Scalar(kPhysicalTolerance))
      : v_(std::move(entries)) {
    if (v_.rows() != v_.cols() || v_.rows() == 0 || v_.rows() % 2 != 0) {
      throw InvalidArgument("covariance matrix must be square with even, nonzero size");
    }
    const Scalar scale = std::max(Scalar(1), v_.cwiseAbs().maxCoeff());
    if ((v_ - v_.transpose()).cwiseAbs().maxCoeff() > Scalar(kSymmetryTolerance) * scale) {
      throw InvalidArgument("covariance matrix is not symmetric");
    }
    v_ = ((v_ + v_.transpose()) / Scalar(2)).eval();
    if (min_uncertainty_eigenvalue() < -physical_tol) {
      throw InvalidArgument("covariance matrix violates the uncertainty relation");
    }
  }

  Index n_modes() const { return v_.rows() / 2; }
  const Matrix& matrix() const { return v_; }
  Scalar operator()(Index i, Index j) const { return v_(i, j); }

  /// Smallest eigenvalue of V + (i/2)Ω.
  Scalar min_uncertainty_eigenvalue() const {
    using Complex = std::complex<Scalar>;
    using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
    CMatrix h = v_.template cast<Complex>();
    for (Index k = 0; k < n_modes(); ++k) {
      h(2 * k, 2 * k + 1) += Complex(0, Scalar(0.5));
      h(2 * k + 1, 2 * k) -= Complex(0, Scalar(0.5));
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  bool is_physical(Scalar tol = Scalar(kPhysicalTolerance)) const {
    return min_uncertainty_eigenvalue() >= -tol;
  }

private:
  Matrix v_;
};

/// Linear map c'_k = Σ_l alpha(k,l) c_l + beta(k,l) c_l† from n_in input modes
/// to n_out output modes.
template <typename Scalar>
struct BogoliubovMap {
  using Complex = std::complex<Scalar>;
  using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

  CMatrix alpha;
  CMatrix beta;

  BogoliubovMap(CMatrix a, CMatrix b) : alpha(std::move(a)), beta(std::move(b)) {
    if (alpha.rows() != beta.rows() || alpha.cols() != beta.cols()) {
      throw InvalidArgument("Bogoliubov alpha and beta blocks differ in shape");
    }
  }

  Index n_out() const { return alpha.rows(); }
  Index n_in() const { return alpha.cols(); }
};

using Covariance = CovarianceMatrix<double>;
using Bogoliubov = BogoliubovMap<double>;

// -- construction -----------------------------------------------------------

template <typename Scalar = double>
CovarianceMatrix<Scalar> vacuum_cov(Index n_modes) {
  if (n_modes < 1) throw InvalidArgument("vacuum_cov needs at least one mode");
  using Matrix = typename CovarianceMatrix<Scalar>::Matrix;
  return CovarianceMatrix<Scalar>(Matrix::Identity(2 * n_modes, 2 * n_modes) / Scalar(2));
}

template <typename Scalar = double>
BogoliubovMap<Scalar> identity_map(Index n_modes) {
  using CMatrix = typename BogoliubovMap<Scalar>::CMatrix;
  return {CMatrix::Identity(n_modes, n_modes), CMatrix::Zero(n_modes, n_modes)};
}

/// Non-degenerate parametric amplifier:
/// a1' = a1 cosh χ + a2† sinh χ,  a2' = a2 cosh χ + a1† sinh χ.
template <typename Scalar = double>
BogoliubovMap<Scalar> two_mode_squeeze_map(Scalar chi) {
  if (!std::isfinite(chi)) throw InvalidArgument("squeezing parameter must be finite");
  if (chi < 0) throw InvalidArgument("squeezing parameter must be non-negative");
  using CMatrix = typename BogoliubovMap<Scalar>::CMatrix;
  CMatrix a = CMatrix::Zero(2, 2);
  CMatrix b = CMatrix::Zero(2, 2);
  a(0, 0) = a(1, 1) = std::cosh(chi);
  b(0, 1) = b(1, 0) = std::sinh(chi);
  return {a, b};
}

/// Two-port beamsplitter with the phase convention of the recall stage:
/// b' = √ε c - √(1-ε) b,  c' = √(1-ε) c + √ε b.  Modes ordered (b, c).
template <typename Scalar = double>
BogoliubovMap<Scalar> beamsplitter_map(Scalar eps) {
  if (!(eps >= 0 && eps <= 1)) throw InvalidArgument("beamsplitter epsilon must lie in [0, 1]");
  using CMatrix = typename BogoliubovMap<Scalar>::CMatrix;
  const Scalar r = std::sqrt(eps);
  const Scalar t = std::sqrt(Scalar(1) - eps);
  CMatrix a(2, 2);
  a << -t, r,
        r, t;
  return {a, CMatrix::Zero(2, 2)};
}

// -- commutator checks ------------------------------------------------------

/// max |αα† - ββ† - I|; zero for a map that keeps [c_k, c_l†] = δ_kl.
template <typename Scalar>
Scalar commutator_residual(const BogoliubovMap<Scalar>& m) {
  using CMatrix = typename BogoliubovMap<Scalar>::CMatrix;
  const CMatrix r = m.alpha * m.alpha.adjoint() - m.beta * m.beta.adjoint() -
                    CMatrix::Identity(m.n_out(), m.n_out());
  return r.cwiseAbs().maxCoeff();
}

/// max |αβᵀ - βαᵀ|; zero when the outputs keep [c_k, c_l] = 0.
template <typename Scalar>
Scalar cross_commutator_residual(const BogoliubovMap<Scalar>& m) {
  const auto r = (m.alpha * m.beta.transpose() - m.beta * m.alpha.transpose()).eval();
  return r.cwiseAbs().maxCoeff();
}

template <typename Scalar>
bool symplectic_check(const BogoliubovMap<Scalar>& m, Scalar tol) {
  return commutator_residual(m) <= tol;
}

// -- transformations --------------------------------------------------------

/// Real 2n_out x 2n_in matrix S with R_out = S R_in on (x, p) quadratures.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> quadrature_matrix(const BogoliubovMap<Scalar>& m) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> s(2 * m.n_out(), 2 * m.n_in());
  for (Index k = 0; k < m.n_out(); ++k) {
    for (Index l = 0; l < m.n_in(); ++l) {
      const auto sum = m.alpha(k, l) + m.beta(k, l);
      const auto diff = m.alpha(k, l) - m.beta(k, l);
      s(2 * k, 2 * l) = sum.real();
      s(2 * k, 2 * l + 1) = -diff.imag();
      s(2 * k + 1, 2 * l) = sum.imag();
      s(2 * k + 1, 2 * l + 1) = diff.real();
    }
  }
  return s;
}

/// Covariance of the map's outputs when its inputs are in state `v_in`.
template <typename Scalar>
CovarianceMatrix<Scalar> transform(const BogoliubovMap<Scalar>& m, const CovarianceMatrix<Scalar>& v_in,
                                   Scalar physical_tol = Scalar(CovarianceMatrix<Scalar>::kPhysicalTolerance)) {
  if (m.n_in() != v_in.n_modes()) throw InvalidArgument("map input count does not match state");
  const auto s = quadrature_matrix(m);
  return CovarianceMatrix<Scalar>(s * v_in.matrix() * s.transpose(), physical_tol);
}

namespace detail {

inline void check_modes(const std::vector<Index>& modes, Index n_modes) {
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i] < 0 || modes[i] >= n_modes) {
      throw InvalidArgument("mode index " + std::to_string(modes[i]) + " out of range");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (modes[i] == modes[j]) throw InvalidArgument("mode indices must be distinct");
    }
  }
}

}  // namespace detail

/// Applies a square map to the listed modes of `v`, leaving the rest alone.
template <typename Scalar>
CovarianceMatrix<Scalar> apply_map(const CovarianceMatrix<Scalar>& v, const BogoliubovMap<Scalar>& m,
                                   const std::vector<Index>& modes) {
  if (m.n_in() != m.n_out()) throw InvalidArgument("apply_map needs a square map");
  if (static_cast<Index>(modes.size()) != m.n_in()) {
    throw InvalidArgument("apply_map: mode list size does not match map dimension");
  }
  detail::check_modes(modes, v.n_modes());

  using Matrix = typename CovarianceMatrix<Scalar>::Matrix;
  const Index dim = 2 * v.n_modes();
  Matrix s = Matrix::Identity(dim, dim);
  const Matrix local = quadrature_matrix(m);
  for (std::size_t k = 0; k < modes.size(); ++k) {
    s.template block<2, 2>(2 * modes[k], 2 * modes[k]).setZero();
  }
  for (std::size_t k = 0; k < modes.size(); ++k) {
    for (std::size_t l = 0; l < modes.size(); ++l) {
      s.template block<2, 2>(2 * modes[k], 2 * modes[l]) = local.template block<2, 2>(2 * k, 2 * l);
    }
  }
  return CovarianceMatrix<Scalar>(s * v.matrix() * s.transpose());
}

/// Reduced state on the kept modes, in the order given.
template <typename Scalar>
CovarianceMatrix<Scalar> partial_trace(const CovarianceMatrix<Scalar>& v, const std::vector<Index>& keep) {
  if (keep.empty()) throw InvalidArgument("partial_trace: keep list is empty");
  detail::check_modes(keep, v.n_modes());
  using Matrix = typename CovarianceMatrix<Scalar>::Matrix;
  const Index n = static_cast<Index>(keep.size());
  Matrix out(2 * n, 2 * n);
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      out.template block<2, 2>(2 * k, 2 * l) = v.matrix().template block<2, 2>(2 * keep[k], 2 * keep[l]);
    }
  }
  return CovarianceMatrix<Scalar>(std::move(out));
}

// -- observables ------------------------------------------------------------

/// <c† c> = (V_xx + V_pp - 1)/2.
template <typename Scalar>
Scalar photon_number(const CovarianceMatrix<Scalar>& v, Index mode) {
  detail::check_modes({mode}, v.n_modes());
  return (v(2 * mode, 2 * mode) + v(2 * mode + 1, 2 * mode + 1) - Scalar(1)) / Scalar(2);
}

/// <Δu²> + <Δv²> for u = √θ x_A + √(1-θ) x_B, v = √θ p_A - √(1-θ) p_B.
template <typename Scalar>
Scalar duan_sum(const CovarianceMatrix<Scalar>& v, Scalar theta, ModePair modes = {}) {
  if (v.n_modes() < 2) throw InvalidArgument("duan_sum needs at least two modes");
  if (!(theta > 0 && theta < 1)) throw InvalidArgument("duan_sum: theta must lie in (0, 1)");
  if (modes.first == modes.second) throw InvalidArgument("duan_sum: modes must differ");
  detail::check_modes({modes.first, modes.second}, v.n_modes());
  const Index a = 2 * modes.first;
  const Index b = 2 * modes.second;
  const Scalar local_a = v(a, a) + v(a + 1, a + 1);
  const Scalar local_b = v(b, b) + v(b + 1, b + 1);
  const Scalar cross = v(a, b) - v(a + 1, b + 1);
  return theta * local_a + (Scalar(1) - theta) * local_b + Scalar(2) * std::sqrt(theta - theta * theta) * cross;
}

template <typename Scalar>
DuanResult<Scalar> minimize_duan(const CovarianceMatrix<Scalar>& v, ModePair modes = {}) {
  // Validate once up front so the search itself cannot throw.
  duan_sum(v, Scalar(0.5), modes);
  return minimize_theta<Scalar>([&](Scalar theta) { return duan_sum(v, theta, modes); });
}

}  // namespace crase
