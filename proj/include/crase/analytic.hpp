#pragma once

// Closed-form model of cavity-enhanced rephased amplified spontaneous
// emission. Region 1 (below threshold, cavity eliminated) acts as a
// non-degenerate parametric amplifier with cosh χ = (γb1 + γa1)/(γb1 - γa1);
// region 2 acts as a beamsplitter with √ε = |γb2 - γa2|/(γb2 + γa2). The
// single temporal ASE and RASE modes are
//
//   A = A0 cosh χ + B0† sinh χ
//   B = √ε C0 - √(1-ε) (B0 cosh χ + A0† sinh χ)
//
// with A0, B0, C0 in vacuum.

#include <crase/gaussian.hpp>

namespace crase {

struct RateParams {
  double gamma_b1{1.0};        // cavity loss, region 1
  double gamma_a1{1.0 / 3.0};  // atomic gain, region 1
  double gamma_b2{1.0};        // cavity loss, region 2
  double gamma_a2{1.0};        // atomic absorption, region 2

  /// Throws AboveThresholdError / InvalidArgument on bad rates.
  void validate() const;
};

struct SqueezeParams {
  double chi{0.0};
  double eps{0.0};

  void validate() const;
};

struct CraseMoments {
  double n_ase{0.0};
  double n_rase{0.0};
  double cross_ab{0.0};  // <AB>
  double efficiency{1.0};
};

/// χ from the region-1 rates. Rejects γa1 ≥ γb1 and γb1 - γa1 < 1e-12 γb1.
double rates_to_chi(double gamma_b1, double gamma_a1);

/// ε from the region-2 rates; √ε is taken as a magnitude.
double rates_to_eps(double gamma_b2, double gamma_a2);

SqueezeParams squeeze_params(const RateParams& rates);

/// Two outputs (A, B) over three vacuum inputs (A0, B0, C0).
Bogoliubov crase_bogoliubov(const SqueezeParams& p);

/// Two-mode covariance of (A, B).
Covariance crase_cov(const SqueezeParams& p);

CraseMoments crase_moments(const SqueezeParams& p);

double duan_sum_closed(const SqueezeParams& p, double theta);

/// θ = (1-ε)/(2-ε). Returns 0 at ε = 1; clip before evaluating.
double theta_star_witness(double eps);

/// Clips θ into [1e-6, 1 - 1e-6].
double clip_theta(double theta);

DuanResult<double> minimize_duan_closed(const SqueezeParams& p);

}  // namespace crase
