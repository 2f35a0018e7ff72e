#pragma once

// Marching-squares contouring and a self-contained SVG 1.1 renderer for the
// minimized Duan sum over the (cosh χ, √ε) plane.

#include <crase/sweep.hpp>

#include <array>
#include <string>
#include <vector>

namespace crase {

inline constexpr std::array<double, 5> kContourLevels{0.1, 0.25, 0.5, 0.75, 0.9};

struct Point2 {
  double x{0.0};
  double y{0.0};
};

struct Segment {
  Point2 a;
  Point2 b;
};

/// Values z(r, c) sampled at (xs[c], ys[r]); returns the iso-line pieces for
/// `level`. Saddle cells are resolved with the cell-centre average.
std::vector<Segment> marching_squares(const std::vector<double>& xs, const std::vector<double>& ys,
                                      const std::vector<double>& z, double level);

/// Cells must come from run_sweep (row-major, √ε outer).
std::string render_contour_svg(const SweepSpec& spec, const std::vector<SweepCell>& cells);

}  // namespace crase
