#pragma once

// Grid sweeps of the minimized Duan sum over (√ε, cosh χ), plus the CSV
// reader/writer used by the figure command and its round-trip tests.

#include <crase/analytic.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace crase {

struct SweepRange {
  double min{0.0};
  double max{1.0};
  int steps{2};

  /// Grid coordinate i; snapped to 9 significant digits so printed values
  /// parse back to the same double.
  double at(int i) const;
};

enum class ThetaPolicy { minimize, witness, fixed };

std::string to_string(ThetaPolicy policy);
ThetaPolicy theta_policy_from_string(const std::string& name);  // throws InvalidArgument

struct SweepSpec {
  SweepRange sqrt_eps{0.0, 0.99, 51};
  SweepRange cosh_chi{1.01, 4.0, 60};
  ThetaPolicy policy{ThetaPolicy::minimize};
  double theta_fixed{0.5};

  void validate() const;
};

struct SweepCell {
  double sqrt_eps{0.0};
  double cosh_chi{1.0};
  double theta_star{0.5};
  double duan_min{1.0};
};

/// Evaluates one cell under the spec's θ policy.
SweepCell evaluate_cell(const SweepSpec& spec, double sqrt_eps, double cosh_chi);

/// Row-major over √ε (outer) and cosh χ (inner). Worker threads fill
/// preassigned slots, so the order never depends on `jobs`.
std::vector<SweepCell> run_sweep(const SweepSpec& spec, int jobs = 1);

/// Decimal text with 9 significant digits, independent of the C locale.
std::string format_number(double value);

/// CSV with header `sqrt_eps,cosh_chi,theta_star,duan_min`.
void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells);
std::vector<SweepCell> read_sweep_csv(std::istream& is);  // throws InvalidArgument

}  // namespace crase
