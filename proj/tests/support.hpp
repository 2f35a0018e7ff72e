#pragma once

// Reference computations shared by the unit and acceptance tests. They work
// directly on mode-operator coefficients and never go through the library's
// quadrature matrices or covariance code.

#include <crase/gaussian.hpp>

#include <cmath>
#include <complex>
#include <random>

namespace crase::testing {

using C = std::complex<double>;

/// Vacuum variance of the Hermitian operator H = Σ_l (mu_l c_l + conj(mu_l) c_l†): <H²> = Σ|mu_l|².
inline double hermitian_variance(const Eigen::VectorXcd& mu) { return mu.squaredNorm(); }

/// <Δu²> + <Δv²> for rows `a`, `b` of a map acting on vacuum, by expanding
/// u and v over the input annihilators.
inline double duan_from_rows(const Bogoliubov& m, Index a, Index b, double theta) {
  const double s = std::sqrt(theta), t = std::sqrt(1.0 - theta), r = std::sqrt(0.5);
  const Index n = m.n_in();
  Eigen::VectorXcd mu_u(n), mu_v(n);
  for (Index l = 0; l < n; ++l) {
    // x_c = (c + c†)/√2 -> coefficient of c_l is (alpha + conj(beta))/√2.
    const C xa = r * (m.alpha(a, l) + std::conj(m.beta(a, l)));
    const C xb = r * (m.alpha(b, l) + std::conj(m.beta(b, l)));
    // p_c = -i(c - c†)/√2 -> coefficient of c_l is -i(alpha - conj(beta))/√2.
    const C pa = C(0, -1) * r * (m.alpha(a, l) - std::conj(m.beta(a, l)));
    const C pb = C(0, -1) * r * (m.alpha(b, l) - std::conj(m.beta(b, l)));
    mu_u(l) = s * xa + t * xb;
    mu_v(l) = s * pa - t * pb;
  }
  return hermitian_variance(mu_u) + hermitian_variance(mu_v);
}

/// <X† X> for row k of a map on vacuum.
inline double number_from_row(const Bogoliubov& m, Index k) { return m.beta.row(k).squaredNorm(); }

/// <X Y> for rows k, l on vacuum.
inline C product_from_rows(const Bogoliubov& m, Index k, Index l) {
  return (m.alpha.row(k).array() * m.beta.row(l).array()).sum();
}

/// The two output modes written out by hand from the amplifier-plus-beamsplitter equations.
inline Bogoliubov reference_crase_map(double cosh_chi, double eps) {
  const double c = cosh_chi, s = std::sqrt(cosh_chi * cosh_chi - 1.0);
  Bogoliubov::CMatrix al = Bogoliubov::CMatrix::Zero(2, 3), be = Bogoliubov::CMatrix::Zero(2, 3);
  al(0, 0) = c;                         // A0 cosh
  be(0, 1) = s;                         // B0† sinh
  al(1, 2) = std::sqrt(eps);            // √ε C0
  al(1, 1) = -std::sqrt(1 - eps) * c;   // -√(1-ε) B0 cosh
  be(1, 0) = -std::sqrt(1 - eps) * s;   // -√(1-ε) A0† sinh
  return {al, be};
}

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240611);
  return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

}  // namespace crase::testing
