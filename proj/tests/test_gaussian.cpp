#include "support.hpp"

#include <crase/gaussian.hpp>

#include <doctest.h>

using namespace crase;
using namespace crase::testing;
using doctest::Approx;

TEST_CASE("vacuum covariance") {
  CHECK(vacuum_cov(1).matrix().isApprox(Eigen::Matrix2d::Identity() / 2));
  const Covariance v2 = vacuum_cov(2);
  CHECK(v2.n_modes() == 2);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 4; ++j) CHECK(v2(i, j) == (i == j ? 0.5 : 0.0));
  }
  CHECK_THROWS_AS(vacuum_cov(0), InvalidArgument);
  CHECK(duan_sum(v2, 0.3) == Approx(1.0).epsilon(1e-15));
  CHECK(photon_number(v2, 1) == 0.0);
  CHECK(v2.min_uncertainty_eigenvalue() == Approx(0.0).scale(1.0).epsilon(1e-14));
}

TEST_CASE("vacuum Duan sum is 1 for every theta") {
  const Covariance v = vacuum_cov(3);
  for (int k = 0; k < 200; ++k) {
    const double theta = uniform(1e-6, 1 - 1e-6);
    CHECK(duan_sum(v, theta, {0, 2}) == Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("covariance validation") {
  Covariance::Matrix m = Covariance::Matrix::Identity(2, 2) / 2;
  m(0, 1) = 0.1;
  CHECK_THROWS_AS(Covariance{m}, InvalidArgument);                       // asymmetric
  CHECK_THROWS_AS(Covariance{Covariance::Matrix::Identity(3, 3)}, InvalidArgument);  // odd size
  CHECK_THROWS_AS(Covariance{Covariance::Matrix::Identity(2, 2) * 0.1}, InvalidArgument);  // below vacuum
  // Squeezed but physical: x variance 0.25, p variance 1.
  Covariance::Matrix sq(2, 2);
  sq << 0.25, 0, 0, 1.0;
  CHECK(Covariance(sq).is_physical());
  sq(1, 1) = 0.9;
  CHECK_THROWS_AS(Covariance{sq}, InvalidArgument);
}

TEST_CASE("two-mode squeezer") {
  const double chi = std::acosh(2.0);
  const Bogoliubov m = two_mode_squeeze_map(chi);
  CHECK(m.alpha(0, 0).real() == Approx(2.0));
  CHECK(m.alpha(1, 1).real() == Approx(2.0));
  CHECK(m.beta(0, 1).real() == Approx(1.7320508075688772));
  CHECK(m.beta(1, 0).real() == Approx(1.7320508075688772));
  CHECK(m.alpha(0, 1) == C(0));
  CHECK(m.beta(0, 0) == C(0));

  const Bogoliubov id = two_mode_squeeze_map(0.0);
  CHECK(id.alpha.isApprox(Bogoliubov::CMatrix::Identity(2, 2)));
  CHECK(id.beta.isZero());

  CHECK_THROWS_AS(two_mode_squeeze_map(-0.1), InvalidArgument);
  CHECK_THROWS_AS(two_mode_squeeze_map(std::nan("")), InvalidArgument);

  const Covariance v = transform(m, vacuum_cov(2));
  CHECK(photon_number(v, 0) == Approx(3.0).epsilon(1e-14));
  CHECK(photon_number(v, 1) == Approx(3.0).epsilon(1e-14));
  CHECK(number_from_row(m, 0) == Approx(3.0));
}

TEST_CASE("squeezed vacuum blocks") {
  for (double chi : {0.0, 0.3, 1.1, 2.5}) {
    const Covariance v = apply_map(vacuum_cov(2), two_mode_squeeze_map(chi), {0, 1});
    const double d = std::cosh(2 * chi) / 2, x = std::sinh(2 * chi) / 2;
    CHECK(v(0, 0) == Approx(d));
    CHECK(v(1, 1) == Approx(d));
    CHECK(v(2, 2) == Approx(d));
    CHECK(v(0, 2) == Approx(x));
    CHECK(v(1, 3) == Approx(-x));
    CHECK(v(0, 1) == Approx(0.0).scale(1));
    CHECK(photon_number(v, 0) == Approx(std::sinh(chi) * std::sinh(chi)));
  }
}

TEST_CASE("beamsplitter") {
  const Bogoliubov b0 = beamsplitter_map(0.0);
  CHECK(b0.alpha(0, 0).real() == Approx(-1.0));  // b' = -b
  CHECK(b0.alpha(0, 1).real() == Approx(0.0).scale(1));
  const Bogoliubov b1 = beamsplitter_map(1.0);
  CHECK(b1.alpha(0, 1).real() == Approx(1.0));  // b' = c
  CHECK(b1.alpha(0, 0).real() == Approx(0.0).scale(1));
  const Bogoliubov bq = beamsplitter_map(0.25);
  CHECK(bq.alpha(0, 1).real() == Approx(0.5));
  CHECK(bq.alpha(0, 0).real() == Approx(-0.8660254037844386));
  CHECK(bq.beta.isZero());
  CHECK_THROWS_AS(beamsplitter_map(1.5), InvalidArgument);
  CHECK_THROWS_AS(beamsplitter_map(-0.01), InvalidArgument);

  const Covariance vac = apply_map(vacuum_cov(2), b1, {0, 1});
  CHECK(vac.matrix().isApprox(vacuum_cov(2).matrix()));

  // Squeezed mode 1 through ε = 0.25: (1 - ε) sinh²χ = 2.25.
  Covariance v = apply_map(vacuum_cov(3), two_mode_squeeze_map(std::acosh(2.0)), {0, 1});
  v = apply_map(v, beamsplitter_map(0.25), {1, 2});
  CHECK(photon_number(v, 1) == Approx(2.25));
}

TEST_CASE("symplectic check") {
  CHECK(symplectic_check(identity_map(3), 0.0));
  for (int k = 0; k < 100; ++k) {
    CHECK(symplectic_check(two_mode_squeeze_map(uniform(0, 3)), 1e-12));
    CHECK(symplectic_check(beamsplitter_map(uniform(0, 1)), 1e-12));
  }
  Bogoliubov bad = two_mode_squeeze_map(0.8);
  bad.beta *= 1.01;
  CHECK_FALSE(symplectic_check(bad, 1e-3));
  CHECK(cross_commutator_residual(two_mode_squeeze_map(1.3)) < 1e-12);
}

TEST_CASE("quadrature matrix is symplectic for commutator-preserving maps") {
  Eigen::Matrix4d omega = Eigen::Matrix4d::Zero();
  omega(0, 1) = omega(2, 3) = 1;
  omega(1, 0) = omega(3, 2) = -1;
  // Complex phases exercise the imaginary parts of the representation.
  Bogoliubov m = two_mode_squeeze_map(0.9);
  m.alpha(0, 0) *= std::polar(1.0, 0.4);
  m.beta(0, 1) *= std::polar(1.0, 0.4);
  const Eigen::MatrixXd s = quadrature_matrix(m);
  CHECK((s * omega * s.transpose() - omega).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("apply_map, transform and partial_trace agree") {
  const Bogoliubov sq = two_mode_squeeze_map(0.7);
  const Covariance full = apply_map(vacuum_cov(3), sq, {2, 0});
  const Covariance direct = transform(sq, vacuum_cov(2));
  const Covariance kept = partial_trace(full, {2, 0});
  CHECK((kept.matrix() - direct.matrix()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(partial_trace(full, {0, 1, 2}).matrix() == full.matrix());
  const Covariance thermal = partial_trace(full, {0});
  CHECK(photon_number(thermal, 0) == Approx(std::pow(std::sinh(0.7), 2)));
  CHECK(thermal.is_physical());
  CHECK(partial_trace(vacuum_cov(3), {1}).matrix().isApprox(vacuum_cov(1).matrix()));
  CHECK_THROWS_AS(partial_trace(full, {}), InvalidArgument);
  CHECK_THROWS_AS(partial_trace(full, {3}), InvalidArgument);
  CHECK_THROWS_AS(apply_map(full, sq, {0, 0}), InvalidArgument);
  CHECK_THROWS_AS(apply_map(full, sq, {0}), InvalidArgument);
  CHECK(apply_map(full, identity_map(3), {0, 1, 2}).matrix().isApprox(full.matrix()));
}

TEST_CASE("duan_sum against operator expansion") {
  for (int k = 0; k < 200; ++k) {
    const double chi = uniform(0, 3), eps = uniform(0, 1), theta = uniform(1e-6, 1 - 1e-6);
    const Bogoliubov m = reference_crase_map(std::cosh(chi), eps);
    const Covariance v = transform(m, vacuum_cov(3));
    const double expected = duan_from_rows(m, 0, 1, theta);
    CHECK(std::abs(duan_sum(v, theta) - expected) <= 1e-10 * std::max(1.0, expected));
  }
  CHECK_THROWS_AS(duan_sum(vacuum_cov(2), 0.0), InvalidArgument);
  CHECK_THROWS_AS(duan_sum(vacuum_cov(2), 1.0), InvalidArgument);
  CHECK_THROWS_AS(duan_sum(vacuum_cov(1), 0.5), InvalidArgument);
  CHECK_THROWS_AS(duan_sum(vacuum_cov(2), 0.5, {1, 1}), InvalidArgument);
}

TEST_CASE("footnote rescaling of the Duan condition") {
  // Unnormalized form: u' = λ x_A + x_B/λ, v' = λ p_A - p_B/λ, bound λ² + 1/λ².
  for (int k = 0; k < 300; ++k) {
    const double lambda = std::exp(uniform(std::log(0.1), std::log(10.0)));
    const double chi = uniform(0, 2.5), eps = uniform(0, 1);
    const Bogoliubov m = reference_crase_map(std::cosh(chi), eps);
    const Covariance v = transform(m, vacuum_cov(3));
    const double l2 = lambda * lambda, bound = l2 + 1 / l2;
    const double raw = l2 * (v(0, 0) + v(1, 1)) + (v(2, 2) + v(3, 3)) / l2 + 2 * (v(0, 2) - v(1, 3));
    const double theta = l2 / bound;
    const double normalized = duan_sum(v, theta);
    CHECK(raw == Approx(bound * normalized).epsilon(1e-10));
    CHECK((normalized < 1) == (raw < bound));
  }
}

TEST_CASE("minimizer soundness") {
  for (int k = 0; k < 20; ++k) {
    const double chi = uniform(0.05, 3), eps = uniform(0, 0.99);
    const Covariance v = transform(reference_crase_map(std::cosh(chi), eps), vacuum_cov(3));
    const DuanResult<double> r = minimize_duan(v);
    CHECK(r.entangled == (r.sum_min < 1));
    CHECK(r.sum_min <= duan_sum(v, 0.5));
    CHECK(r.sum_min <= duan_sum(v, std::clamp((1 - eps) / (2 - eps), 1e-6, 1 - 1e-6)));
    for (int p = 0; p < 1000; ++p) CHECK(r.sum_min <= duan_sum(v, uniform(1e-6, 1 - 1e-6)));
  }
}

TEST_CASE("minimizer tie-break and non-unimodal fallback") {
  const DuanResult<double> flat = minimize_duan(vacuum_cov(2));
  CHECK(flat.theta_star == 0.5);
  CHECK(flat.sum_min == Approx(1.0));
  CHECK_FALSE(flat.entangled);

  // Two wells; the deeper one sits near 0.83 and golden section alone lands in the other.
  auto f = [](double t) { return 1.0 - 0.5 * std::exp(-std::pow((t - 0.2) / 0.05, 2)) -
                                 0.6 * std::exp(-std::pow((t - 0.83) / 0.01, 2)); };
  const DuanResult<double> r = minimize_theta<double>(f);
  CHECK(r.theta_star == Approx(0.83).epsilon(1e-6));
  CHECK(r.sum_min == Approx(0.4).epsilon(1e-9));
}

TEST_CASE("scalar genericity") {
  const auto v = vacuum_cov<long double>(2);
  CHECK(static_cast<double>(duan_sum(v, 0.25L)) == Approx(1.0));
  const auto m = two_mode_squeeze_map<float>(0.5f);
  CHECK(commutator_residual(m) < 1e-5f);
  const auto w = transform(m, vacuum_cov<float>(2), 1e-5f);
  CHECK(static_cast<double>(photon_number(w, 0)) == Approx(std::pow(std::sinh(0.5), 2)).epsilon(1e-5));
}
