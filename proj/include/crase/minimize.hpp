#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace crase {

template <typename Scalar>
struct DuanResult {
  Scalar theta_star{0.5};
  Scalar sum_min{1};
  bool entangled{false};
};

namespace theta_search {

inline constexpr double kEdge = 1e-6;         // search domain is [kEdge, 1 - kEdge]
inline constexpr double kTolerance = 1e-9;    // absolute tolerance on theta
inline constexpr double kScanStep = 1e-3;     // fallback dense scan
inline constexpr int kProbeCount = 64;        // unimodality probes

/// Golden-section search for a minimum of `f` on [lo, hi]. Returns the best
/// abscissa visited.
template <typename Scalar, typename F>
Scalar golden_section(F&& f, Scalar lo, Scalar hi, Scalar tol) {
  const Scalar inv_phi = (std::sqrt(Scalar(5)) - 1) / 2;
  Scalar c = hi - inv_phi * (hi - lo);
  Scalar d = lo + inv_phi * (hi - lo);
  Scalar fc = f(c);
  Scalar fd = f(d);
  while (hi - lo > tol) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  const Scalar mid = (lo + hi) / 2;
  const Scalar fm = f(mid);
  if (fc <= fm && fc <= fd) return c;
  if (fd <= fm) return d;
  return mid;
}

}  // namespace theta_search

/// Minimizes a Duan-type functional of the mixing weight theta over
/// (0, 1), clipped to [1e-6, 1 - 1e-6].
///
/// Golden-section search runs first. The result is then compared against a
/// coarse probe set; if any probe beats it, the functional is not unimodal and
/// a dense scan (step 1e-3) picks the basin, which golden-section then refines.
/// The returned sum never exceeds the value at any point evaluated here. When
/// theta = 1/2 is as good as the optimum (flat or symmetric functionals) it is
/// reported as the minimizer.
template <typename Scalar, typename F>
DuanResult<Scalar> minimize_theta(F&& f) {
  using namespace theta_search;
  const Scalar lo = Scalar(kEdge);
  const Scalar hi = Scalar(1) - Scalar(kEdge);
  const Scalar tol = Scalar(kTolerance);

  Scalar best_theta = golden_section<Scalar>(f, lo, hi, tol);
  Scalar best = f(best_theta);

  auto consider = [&](Scalar theta) {
    const Scalar v = f(theta);
    if (v < best) {
      best = v;
      best_theta = theta;
    }
    return v;
  };

  const Scalar golden_best = best;
  const Scalar slack = Scalar(1e-12) * std::max(Scalar(1), std::abs(best));
  bool unimodal = true;
  for (int k = 0; k <= kProbeCount; ++k) {
    const Scalar theta = lo + (hi - lo) * Scalar(k) / Scalar(kProbeCount);
    if (consider(theta) < golden_best - slack) unimodal = false;
  }

  if (!unimodal) {
    const int n = static_cast<int>(std::ceil((hi - lo) / Scalar(kScanStep)));
    Scalar scan_theta = lo;
    Scalar scan_best = std::numeric_limits<Scalar>::infinity();
    for (int k = 0; k <= n; ++k) {
      const Scalar theta = std::min(hi, lo + Scalar(kScanStep) * Scalar(k));
      const Scalar v = consider(theta);
      if (v < scan_best) {
        scan_best = v;
        scan_theta = theta;
      }
    }
    const Scalar a = std::max(lo, scan_theta - Scalar(kScanStep));
    const Scalar b = std::min(hi, scan_theta + Scalar(kScanStep));
    consider(golden_section<Scalar>(f, a, b, tol));
  }

  // Tie-break toward the symmetric point.
  const Scalar at_half = f(Scalar(0.5));
  const Scalar tie = Scalar(1e-12) * std::max(Scalar(1), std::abs(best));
  if (at_half <= best + tie) {
    best = std::min(best, at_half);
    best_theta = Scalar(0.5);
  }

  DuanResult<Scalar> out;
  out.theta_star = best_theta;
  out.sum_min = best;
  out.entangled = best < Scalar(1);
  return out;
}

}  // namespace crase
