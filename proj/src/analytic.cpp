#include <crase/analytic.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace crase {

namespace {

constexpr double kThresholdGuard = 1e-12;

void require_finite_nonnegative(double value, const char* name) {
  if (!std::isfinite(value) || value < 0) {
    std::ostringstream os;
    os << name << " must be finite and non-negative (got " << value << ")";
    throw InvalidArgument(os.str());
  }
}

}  // namespace

void RateParams::validate() const {
  require_finite_nonnegative(gamma_b1, "gamma_b1");
  require_finite_nonnegative(gamma_a1, "gamma_a1");
  require_finite_nonnegative(gamma_b2, "gamma_b2");
  require_finite_nonnegative(gamma_a2, "gamma_a2");
  rates_to_chi(gamma_b1, gamma_a1);
  rates_to_eps(gamma_b2, gamma_a2);
}

void SqueezeParams::validate() const {
  if (!std::isfinite(chi) || chi < 0) throw InvalidArgument("chi must be finite and non-negative");
  if (!(eps >= 0 && eps <= 1)) throw InvalidArgument("eps must lie in [0, 1]");
}

double rates_to_chi(double gamma_b1, double gamma_a1) {
  require_finite_nonnegative(gamma_b1, "gamma_b1");
  require_finite_nonnegative(gamma_a1, "gamma_a1");
  const double net_loss = gamma_b1 - gamma_a1;
  if (net_loss <= kThresholdGuard * gamma_b1 || gamma_b1 == 0) {
    std::ostringstream os;
    os << "gamma_a1 = " << gamma_a1 << " >= gamma_b1 = " << gamma_b1
       << ": region 1 must stay below the lasing threshold (gamma_a1 < gamma_b1)";
    throw AboveThresholdError(os.str());
  }
  return std::acosh((gamma_b1 + gamma_a1) / net_loss);
}

double rates_to_eps(double gamma_b2, double gamma_a2) {
  require_finite_nonnegative(gamma_b2, "gamma_b2");
  require_finite_nonnegative(gamma_a2, "gamma_a2");
  const double total = gamma_b2 + gamma_a2;
  if (!(total > 0)) throw InvalidArgument("gamma_b2 + gamma_a2 must be positive");
  const double root = std::abs(gamma_b2 - gamma_a2) / total;
  return root * root;
}

SqueezeParams squeeze_params(const RateParams& rates) {
  rates.validate();
  return {rates_to_chi(rates.gamma_b1, rates.gamma_a1), rates_to_eps(rates.gamma_b2, rates.gamma_a2)};
}

Bogoliubov crase_bogoliubov(const SqueezeParams& p) {
  p.validate();
  const double c = std::cosh(p.chi);
  const double s = std::sinh(p.chi);
  const double keep = std::sqrt(1.0 - p.eps);
  Bogoliubov::CMatrix alpha = Bogoliubov::CMatrix::Zero(2, 3);
  Bogoliubov::CMatrix beta = Bogoliubov::CMatrix::Zero(2, 3);
  // A row
  alpha(0, 0) = c;
  beta(0, 1) = s;
  // B row
  alpha(1, 1) = -keep * c;
  alpha(1, 2) = std::sqrt(p.eps);
  beta(1, 0) = -keep * s;
  return {alpha, beta};
}

Covariance crase_cov(const SqueezeParams& p) {
  p.validate();
  const double c = std::cosh(p.chi);
  const double s = std::sinh(p.chi);
  const double keep = std::sqrt(1.0 - p.eps);
  const double va = (1.0 + 2.0 * s * s) / 2.0;
  const double vb = (1.0 + 2.0 * (1.0 - p.eps) * s * s) / 2.0;
  const double cross = keep * s * c;
  Covariance::Matrix v(4, 4);
  v << va,     0.0,   -cross, 0.0,
       0.0,    va,     0.0,   cross,
       -cross, 0.0,    vb,    0.0,
       0.0,    cross,  0.0,   vb;
  return Covariance(v);
}

CraseMoments crase_moments(const SqueezeParams& p) {
  p.validate();
  const double s = std::sinh(p.chi);
  CraseMoments m;
  m.n_ase = s * s;
  m.n_rase = (1.0 - p.eps) * s * s;
  m.cross_ab = -std::sqrt(1.0 - p.eps) * s * std::cosh(p.chi);
  m.efficiency = 1.0 - p.eps;
  return m;
}

double duan_sum_closed(const SqueezeParams& p, double theta) {
  if (!(theta > 0 && theta < 1)) throw InvalidArgument("duan_sum_closed: theta must lie in (0, 1)");
  const double s = std::sinh(p.chi);
  const double c = std::cosh(p.chi);
  return 1.0 + 2.0 * s * s - 2.0 * p.eps * (1.0 - theta) * s * s -
         4.0 * std::sqrt(theta - theta * theta) * std::sqrt(1.0 - p.eps) * c * s;
}

double theta_star_witness(double eps) {
  if (!(eps >= 0 && eps <= 1)) throw InvalidArgument("theta_star_witness: eps must lie in [0, 1]");
  return (1.0 - eps) / (2.0 - eps);
}

double clip_theta(double theta) {
  return std::clamp(theta, theta_search::kEdge, 1.0 - theta_search::kEdge);
}

DuanResult<double> minimize_duan_closed(const SqueezeParams& p) {
  p.validate();
  return minimize_theta<double>([&](double theta) { return duan_sum_closed(p, theta); });
}

}  // namespace crase
