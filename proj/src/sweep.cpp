#include <crase/sweep.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace crase {

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 9);
  return std::string(buf.data(), res.ptr);
}

namespace {

double parse_double(const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw InvalidArgument("not a number: '" + text + "'");
  return v;
}

double snap(double v) { return parse_double(format_number(v)); }

void validate_range(const SweepRange& r, const char* name) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max)) throw InvalidArgument(std::string(name) + " range must be finite");
  if (r.steps < 2) throw InvalidArgument(std::string(name) + " range needs at least 2 steps");
  if (!(r.min < r.max)) throw InvalidArgument(std::string(name) + " range must satisfy min < max");
}

}  // namespace

double SweepRange::at(int i) const {
  if (i == 0) return snap(min);
  if (i == steps - 1) return snap(max);
  return snap(min + (max - min) * static_cast<double>(i) / static_cast<double>(steps - 1));
}

std::string to_string(ThetaPolicy policy) {
  switch (policy) {
    case ThetaPolicy::minimize: return "minimize";
    case ThetaPolicy::witness: return "witness";
    case ThetaPolicy::fixed: return "fixed";
  }
  return "minimize";
}

ThetaPolicy theta_policy_from_string(const std::string& name) {
  if (name == "minimize") return ThetaPolicy::minimize;
  if (name == "witness") return ThetaPolicy::witness;
  if (name == "fixed") return ThetaPolicy::fixed;
  throw InvalidArgument("theta_policy must be one of minimize, witness, fixed (got '" + name + "')");
}

void SweepSpec::validate() const {
  validate_range(sqrt_eps, "sqrt_eps");
  validate_range(cosh_chi, "cosh_chi");
  if (sqrt_eps.min < 0.0 || sqrt_eps.max > 0.99) throw InvalidArgument("sqrt_eps range must lie in [0, 0.99]");
  if (cosh_chi.min < 1.0) throw InvalidArgument("cosh_chi range must start at or above 1");
  if (policy == ThetaPolicy::fixed && !(theta_fixed > 0.0 && theta_fixed < 1.0)) {
    throw InvalidArgument("theta_fixed must lie in (0, 1)");
  }
}

SweepCell evaluate_cell(const SweepSpec& spec, double sqrt_eps, double cosh_chi) {
  const SqueezeParams p{std::acosh(cosh_chi), sqrt_eps * sqrt_eps};
  SweepCell cell{sqrt_eps, cosh_chi, 0.5, 1.0};
  switch (spec.policy) {
    case ThetaPolicy::minimize: {
      const DuanResult<double> r = minimize_duan_closed(p);
      cell.theta_star = r.theta_star;
      cell.duan_min = r.sum_min;
      break;
    }
    case ThetaPolicy::witness:
      cell.theta_star = clip_theta(theta_star_witness(p.eps));
      cell.duan_min = duan_sum_closed(p, cell.theta_star);
      break;
    case ThetaPolicy::fixed:
      cell.theta_star = spec.theta_fixed;
      cell.duan_min = duan_sum_closed(p, cell.theta_star);
      break;
  }
  return cell;
}

std::vector<SweepCell> run_sweep(const SweepSpec& spec, int jobs) {
  spec.validate();
  const int rows = spec.sqrt_eps.steps;
  const int cols = spec.cosh_chi.steps;
  const int total = rows * cols;
  std::vector<SweepCell> cells(static_cast<std::size_t>(total));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < total; k = next++) {
      cells[static_cast<std::size_t>(k)] = evaluate_cell(spec, spec.sqrt_eps.at(k / cols), spec.cosh_chi.at(k % cols));
    }
  };
  const int threads = std::max(1, std::min(jobs, total));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return cells;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
  os << "sqrt_eps,cosh_chi,theta_star,duan_min\n";
  for (const SweepCell& c : cells) {
    os << format_number(c.sqrt_eps) << ',' << format_number(c.cosh_chi) << ',' << format_number(c.theta_star) << ','
       << format_number(c.duan_min) << '\n';
  }
}

std::vector<SweepCell> read_sweep_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("empty sweep CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "sqrt_eps,cosh_chi,theta_star,duan_min") throw InvalidArgument("unexpected sweep CSV header: " + line);
  std::vector<SweepCell> cells;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, 4> v{};
    std::istringstream fields(line);
    std::string field;
    std::size_t n = 0;
    while (std::getline(fields, field, ',')) {
      if (n == v.size()) throw InvalidArgument("too many fields in sweep CSV row: " + line);
      v[n++] = parse_double(field);
    }
    if (n != v.size()) throw InvalidArgument("too few fields in sweep CSV row: " + line);
    cells.push_back({v[0], v[1], v[2], v[3]});
  }
  return cells;
}

}  // namespace crase
