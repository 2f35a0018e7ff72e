#include <crase/contour.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace crase {

std::vector<Segment> marching_squares(const std::vector<double>& xs, const std::vector<double>& ys,
                                      const std::vector<double>& z, double level) {
  const std::size_t nx = xs.size();
  const std::size_t ny = ys.size();
  if (z.size() != nx * ny) throw InvalidArgument("marching_squares: value grid does not match the axes");
  std::vector<Segment> out;
  if (nx < 2 || ny < 2) return out;

  auto value = [&](std::size_t r, std::size_t c) { return z[r * nx + c]; };
  for (std::size_t r = 0; r + 1 < ny; ++r) {
    for (std::size_t c = 0; c + 1 < nx; ++c) {
      // Corners counter-clockwise from (x_c, y_r).
      const std::array<Point2, 4> p{Point2{xs[c], ys[r]}, Point2{xs[c + 1], ys[r]}, Point2{xs[c + 1], ys[r + 1]},
                                    Point2{xs[c], ys[r + 1]}};
      const std::array<double, 4> v{value(r, c), value(r, c + 1), value(r + 1, c + 1), value(r + 1, c)};
      std::array<bool, 4> above{};
      for (int k = 0; k < 4; ++k) above[k] = v[k] >= level;

      // Edge k joins corner k and corner k+1.
      std::array<Point2, 4> hit{};
      std::array<bool, 4> crossed{};
      int count = 0;
      for (int k = 0; k < 4; ++k) {
        const int n = (k + 1) % 4;
        if (above[k] == above[n]) continue;
        const double t = (level - v[k]) / (v[n] - v[k]);
        hit[k] = {p[k].x + t * (p[n].x - p[k].x), p[k].y + t * (p[n].y - p[k].y)};
        crossed[k] = true;
        ++count;
      }
      if (count == 2) {
        std::array<Point2, 2> ends{};
        int e = 0;
        for (int k = 0; k < 4; ++k) {
          if (crossed[k]) ends[e++] = hit[k];
        }
        out.push_back({ends[0], ends[1]});
      } else if (count == 4) {
        const bool centre = (v[0] + v[1] + v[2] + v[3]) / 4.0 >= level;
        if (centre == above[0]) {
          // Corners 0 and 2 connect through the centre; cut off 1 and 3.
          out.push_back({hit[0], hit[1]});
          out.push_back({hit[2], hit[3]});
        } else {
          out.push_back({hit[3], hit[0]});
          out.push_back({hit[1], hit[2]});
        }
      }
    }
  }
  return out;
}

namespace {

std::string fixed(double v, int digits) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, digits);
  return std::string(buf.data(), res.ptr);
}

// Dark blue at 0 fading to near white at 1.
std::string fill_colour(double z) {
  const double t = std::clamp(z, 0.0, 1.0);
  auto channel = [&](double lo, double hi) { return static_cast<int>(std::lround(lo + (hi - lo) * t)); };
  std::ostringstream os;
  os << "rgb(" << channel(16, 240) << ',' << channel(52, 244) << ',' << channel(120, 250) << ')';
  return os.str();
}

}  // namespace

std::string render_contour_svg(const SweepSpec& spec, const std::vector<SweepCell>& cells) {
  const int rows = spec.sqrt_eps.steps;
  const int cols = spec.cosh_chi.steps;
  if (cells.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw InvalidArgument("render_contour_svg: cell count does not match the sweep grid");
  }
  std::vector<double> xs(cols), ys(rows), z(cells.size());
  for (int c = 0; c < cols; ++c) xs[c] = spec.cosh_chi.at(c);
  for (int r = 0; r < rows; ++r) ys[r] = spec.sqrt_eps.at(r);
  for (std::size_t k = 0; k < cells.size(); ++k) z[k] = cells[k].duan_min;

  const double width = 640, height = 480;
  const double left = 70, right = 130, top = 30, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;
  const double x0 = xs.front(), x1 = xs.back(), y0 = ys.front(), y1 = ys.back();
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fixed(width, 0) << "\" height=\""
     << fixed(height, 0) << "\" viewBox=\"0 0 " << fixed(width, 0) << ' ' << fixed(height, 0) << "\">\n"
     << "<title>Minimized Duan sum versus cosh(chi) and sqrt(eps)</title>\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << fixed(width, 0) << "\" height=\"" << fixed(height, 0)
     << "\" fill=\"white\"/>\n";

  // Heat map: one rectangle per sample, spanning halfway to its neighbours.
  os << "<g id=\"heatmap\" stroke=\"none\">\n";
  auto half_span = [](const std::vector<double>& a, std::size_t i) {
    const double lo = i == 0 ? a[0] : 0.5 * (a[i - 1] + a[i]);
    const double hi = i + 1 == a.size() ? a[i] : 0.5 * (a[i] + a[i + 1]);
    return std::pair{lo, hi};
  };
  for (int r = 0; r < rows; ++r) {
    const auto [ylo, yhi] = half_span(ys, static_cast<std::size_t>(r));
    for (int c = 0; c < cols; ++c) {
      const auto [xlo, xhi] = half_span(xs, static_cast<std::size_t>(c));
      os << "<rect x=\"" << fixed(sx(xlo), 2) << "\" y=\"" << fixed(sy(yhi), 2) << "\" width=\""
         << fixed(sx(xhi) - sx(xlo), 2) << "\" height=\"" << fixed(sy(ylo) - sy(yhi), 2) << "\" fill=\""
         << fill_colour(z[static_cast<std::size_t>(r) * cols + c]) << "\"/>\n";
    }
  }
  os << "</g>\n";

  os << "<g id=\"contours\" fill=\"none\" stroke=\"black\" stroke-width=\"1.2\">\n";
  for (double level : kContourLevels) {
    os << "<g class=\"level\" data-level=\"" << format_number(level) << "\">\n";
    for (const Segment& s : marching_squares(xs, ys, z, level)) {
      os << "<line x1=\"" << fixed(sx(s.a.x), 2) << "\" y1=\"" << fixed(sy(s.a.y), 2) << "\" x2=\""
         << fixed(sx(s.b.x), 2) << "\" y2=\"" << fixed(sy(s.b.y), 2) << "\"/>\n";
    }
    os << "</g>\n";
  }
  os << "</g>\n";

  // Frame, ticks and labels.
  os << "<g id=\"axes\" font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">\n"
     << "<rect x=\"" << fixed(left, 0) << "\" y=\"" << fixed(top, 0) << "\" width=\"" << fixed(pw, 0)
     << "\" height=\"" << fixed(ph, 0) << "\" fill=\"none\" stroke=\"black\"/>\n";
  constexpr int kTicks = 5;
  for (int t = 0; t <= kTicks; ++t) {
    const double x = x0 + (x1 - x0) * t / kTicks;
    const double y = y0 + (y1 - y0) * t / kTicks;
    os << "<line x1=\"" << fixed(sx(x), 2) << "\" y1=\"" << fixed(top + ph, 2) << "\" x2=\"" << fixed(sx(x), 2)
       << "\" y2=\"" << fixed(top + ph + 5, 2) << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << fixed(sx(x), 2) << "\" y=\"" << fixed(top + ph + 20, 2) << "\" text-anchor=\"middle\">"
       << fixed(x, 2) << "</text>\n"
       << "<line x1=\"" << fixed(left - 5, 2) << "\" y1=\"" << fixed(sy(y), 2) << "\" x2=\"" << fixed(left, 2)
       << "\" y2=\"" << fixed(sy(y), 2) << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << fixed(left - 8, 2) << "\" y=\"" << fixed(sy(y) + 4, 2) << "\" text-anchor=\"end\">"
       << fixed(y, 2) << "</text>\n";
  }
  os << "<text x=\"" << fixed(left + pw / 2, 2) << "\" y=\"" << fixed(height - 15, 2)
     << "\" text-anchor=\"middle\">cosh &#967;</text>\n"
     << "<text x=\"18\" y=\"" << fixed(top + ph / 2, 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << fixed(top + ph / 2, 2) << ")\">&#8730;&#949;</text>\n";

  // Legend: colour ramp plus the contour levels.
  const double lx = left + pw + 30, lw = 18;
  constexpr int kRampSteps = 20;
  for (int k = 0; k < kRampSteps; ++k) {
    const double zk = 1.0 - (k + 0.5) / kRampSteps;
    os << "<rect x=\"" << fixed(lx, 2) << "\" y=\"" << fixed(top + ph * k / kRampSteps, 2) << "\" width=\""
       << fixed(lw, 2) << "\" height=\"" << fixed(ph / kRampSteps + 0.5, 2) << "\" fill=\"" << fill_colour(zk)
       << "\"/>\n";
  }
  os << "<text x=\"" << fixed(lx + lw + 6, 2) << "\" y=\"" << fixed(top + 10, 2) << "\">1</text>\n"
     << "<text x=\"" << fixed(lx + lw + 6, 2) << "\" y=\"" << fixed(top + ph, 2) << "\">0</text>\n";
  for (double level : kContourLevels) {
    const double y = top + ph * (1.0 - level);
    os << "<line x1=\"" << fixed(lx - 3, 2) << "\" y1=\"" << fixed(y, 2) << "\" x2=\"" << fixed(lx + lw + 3, 2)
       << "\" y2=\"" << fixed(y, 2) << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << fixed(lx + lw + 6, 2) << "\" y=\"" << fixed(y + 4, 2) << "\">" << format_number(level)
       << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace crase
