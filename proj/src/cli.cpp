#include <crase/cli.hpp>

#include <crase/config.hpp>
#include <crase/contour.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace crase {

namespace {

using Row = std::pair<std::string, std::string>;

std::string num(double v) { return format_number(v); }

void print_rows(std::ostream& out, const std::vector<Row>& rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  for (const auto& [k, v] : rows) out << std::left << std::setw(static_cast<int>(width) + 2) << k << v << '\n';
}

// RFC 4180 quoting for fields that need it.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

void write_csv_rows(std::ostream& os, const std::vector<std::vector<std::string>>& rows) {
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << csv_field(row[k]);
    os << '\n';
  }
}

struct OutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw OutputError("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw OutputError("failed writing '" + path + "'");
}

std::string csv_text(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  write_csv_rows(os, rows);
  return os.str();
}

int cmd_analytic(const RunConfig& cfg, std::ostream& out) {
  const SqueezeParams p = squeeze_params(cfg.oracle.rates);
  const CraseMoments m = crase_moments(p);
  const DuanResult<double> best = minimize_duan_closed(p);
  const double theta_witness = clip_theta(theta_star_witness(p.eps));
  const double witness = duan_sum_closed(p, theta_witness);
  const std::string verdict = best.entangled ? "entangled" : "no entanglement (boundary)";

  print_rows(out, {{"chi", num(p.chi)},
                   {"cosh_chi", num(std::cosh(p.chi))},
                   {"eps", num(p.eps)},
                   {"n_ase", num(m.n_ase)},
                   {"n_rase", num(m.n_rase)},
                   {"cross_ab", num(m.cross_ab)},
                   {"efficiency", num(m.efficiency)},
                   {"theta_star", num(best.theta_star)},
                   {"duan_min", num(best.sum_min)},
                   {"theta_witness", num(theta_witness)},
                   {"duan_witness", num(witness)},
                   {"status", verdict}});
  if (!cfg.csv_path.empty()) {
    write_file(cfg.csv_path,
               csv_text({{"chi", "cosh_chi", "eps", "n_ase", "n_rase", "cross_ab", "efficiency", "theta_star", "duan_min",
                          "theta_witness", "duan_witness", "status"},
                         {num(p.chi), num(std::cosh(p.chi)), num(p.eps), num(m.n_ase), num(m.n_rase), num(m.cross_ab),
                          num(m.efficiency), num(best.theta_star), num(best.sum_min), num(theta_witness), num(witness),
                          verdict}}));
  }
  return kExitOk;
}

int cmd_figure3(const RunConfig& cfg, int jobs, std::ostream& out, std::ostream& err) {
  const std::vector<SweepCell> cells = run_sweep(cfg.sweep, jobs);
  std::ostringstream csv;
  write_sweep_csv(csv, cells);
  if (cfg.csv_path.empty()) {
    out << csv.str();
  } else {
    write_file(cfg.csv_path, csv.str());
  }
  if (!cfg.svg_path.empty()) write_file(cfg.svg_path, render_contour_svg(cfg.sweep, cells));

  std::size_t failures = 0;
  double worst = 0.0;
  for (const SweepCell& c : cells) {
    worst = std::max(worst, c.duan_min);
    if (!(c.duan_min < 1.0)) ++failures;
  }
  std::ostream& summary = cfg.csv_path.empty() ? err : out;
  summary << "cells " << cells.size() << ", theta policy " << to_string(cfg.sweep.policy) << ", max duan_min "
          << num(worst) << '\n';
  // A fixed θ can legitimately miss the entangled region; the claim is about the optimized sum.
  if (failures > 0 && cfg.sweep.policy != ThetaPolicy::fixed) {
    err << "claim violation: " << failures << " cell(s) with duan_min >= 1\n";
    return kExitClaimViolation;
  }
  return kExitOk;
}

bool finite_report(const OracleReport& r) {
  return std::isfinite(r.n_ase) && std::isfinite(r.n_rase) && std::isfinite(r.cross_ab) &&
         r.covariance.allFinite();
}

std::vector<std::vector<std::string>> oracle_rows(const OracleReport& r, const SqueezeParams& p) {
  const CraseMoments ref = crase_moments(p);
  const AnalyticDeltas& d = r.analytic_deltas;
  std::vector<std::vector<std::string>> rows{
      {"quantity", "oracle", "analytic", "delta"},
      {"n_ase", num(r.n_ase), num(ref.n_ase), num(d.n_ase)},
      {"n_rase", num(r.n_rase), num(ref.n_rase), num(d.n_rase)},
      {"cross_ab", num(r.cross_ab), num(ref.cross_ab), num(d.cross_ab)},
      {"efficiency", r.efficiency ? num(*r.efficiency) : "", num(ref.efficiency), num(d.efficiency)}};
  for (std::size_t k = 0; k < kDeltaThetas.size(); ++k) {
    rows.push_back({"duan(" + num(kDeltaThetas[k]) + ")", num(r.duan_sum_at(kDeltaThetas[k])),
                    num(duan_sum_closed(p, kDeltaThetas[k])), num(d.duan[k])});
  }
  return rows;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const OracleReport r = run_oracle(cfg.oracle);
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  if (!finite_report(r)) {
    err << "instability: non-finite moments\n";
    return kExitInstability;
  }
  const SqueezeParams p = squeeze_params(cfg.oracle.rates);
  const auto rows = oracle_rows(r, p);
  for (const auto& row : rows) {
    out << std::left << std::setw(12) << row[0] << std::setw(18) << row[1] << std::setw(18) << row[2] << row[3]
        << '\n';
  }
  print_rows(out, {{"commutator_a", num(r.commutator_a)},
                   {"commutator_b", num(r.commutator_b)},
                   {"commutator_ab", num(r.commutator_ab)},
                   {"cross_ab_imag", num(r.cross_ab_imag)},
                   {"cavity_commutator_error", num(r.cavity_commutator_error)},
                   {"rephasing_overlap", num(r.rephasing_overlap)},
                   {"n_atomic_output", num(r.n_atomic_output)},
                   {"max_delta", num(r.analytic_deltas.max())},
                   {"tolerance", num(cfg.tolerance)}});
  if (!cfg.csv_path.empty()) write_file(cfg.csv_path, csv_text(rows));
  if (r.analytic_deltas.max() > cfg.tolerance) {
    err << "tolerance failure: max delta " << num(r.analytic_deltas.max()) << " > " << num(cfg.tolerance) << '\n';
    return kExitTolerance;
  }
  return kExitOk;
}

int cmd_converge(const RunConfig& cfg, int jobs, std::ostream& out, std::ostream& err) {
  const ConvergenceTable table = convergence_study(cfg.oracle, cfg.levels, jobs);
  std::vector<std::vector<std::string>> rows{{"level", "m_oscillators", "delta_max", "dt", "t_region", "mode_sigma",
                                              "n_ase", "n_rase", "cross_ab", "efficiency", "duan_0.1", "duan_0.3",
                                              "duan_0.5", "duan_0.7", "duan_0.9", "max_delta", "commutator_a",
                                              "commutator_b", "regime_flagged"}};
  bool finite = true;
  for (const ConvergenceLevel& l : table.levels) {
    const AnalyticDeltas& d = l.report.analytic_deltas;
    finite = finite && finite_report(l.report);
    std::vector<std::string> row{std::to_string(l.level), std::to_string(l.config.m_oscillators),
                                 num(l.config.delta_max), num(l.config.dt), num(l.config.t_region),
                                 num(l.config.mode_sigma), num(d.n_ase), num(d.n_rase), num(d.cross_ab),
                                 num(d.efficiency)};
    for (double x : d.duan) row.push_back(num(x));
    row.push_back(num(d.max()));
    row.push_back(num(l.report.commutator_a));
    row.push_back(num(l.report.commutator_b));
    row.push_back(l.regime_flagged ? "yes" : "no");
    rows.push_back(std::move(row));
    for (const auto& w : l.report.warnings) err << "warning (level " << l.level << "): " << w << '\n';
  }
  if (!finite) {
    err << "instability: non-finite moments\n";
    return kExitInstability;
  }
  // Space-aligned text version of the same table.
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
  }
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << std::left << std::setw(static_cast<int>(width[k]) + 2) << row[k];
    out << '\n';
  }
  if (!cfg.csv_path.empty()) write_file(cfg.csv_path, csv_text(rows));

  const double final_delta = table.levels.back().report.analytic_deltas.max();
  const bool monotone = table.monotone();
  out << "final_max_delta " << num(final_delta) << "\nmonotone " << (monotone ? "yes" : "no") << '\n';
  if (final_delta > cfg.tolerance || !monotone) {
    err << "tolerance failure: final max delta " << num(final_delta) << " (tolerance " << num(cfg.tolerance)
        << "), monotone " << (monotone ? "yes" : "no") << '\n';
    return kExitTolerance;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cavity-enhanced rephased ASE: analytic model, Langevin oracle and figure sweeps", "crase"};
  std::string command;
  std::string config_path;
  std::optional<std::string> csv_path;
  std::optional<std::string> svg_path;
  std::optional<double> tolerance;
  std::optional<int> levels;
  int jobs = 1;
  bool dump = false;

  app.add_option("command", command, "analytic | figure3 | oracle | converge")
      ->check(CLI::IsMember({"analytic", "figure3", "oracle", "converge"}));
  app.add_option("--config", config_path, "Run configuration file (key = value)");
  app.add_option("--csv", csv_path, "Write machine-readable results to this CSV file");
  app.add_option("--svg", svg_path, "Write the figure3 contour plot to this SVG file");
  app.add_option("--tolerance", tolerance, "Max analytic delta accepted by oracle/converge");
  app.add_option("--levels", levels, "Refinement levels for converge (>= 2)");
  app.add_option("--jobs", jobs, "Worker threads for sweeps and convergence levels")->check(CLI::PositiveNumber);
  app.add_flag("--dump-config", dump, "Print the effective configuration in canonical form and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  RunConfig cfg;
  try {
    ParsedConfig parsed = config_path.empty() ? parse_config_text("") : parse_config(config_path);
    cfg = std::move(parsed.config);
    if (!parsed.defaulted.empty()) {
      err << "notice: using defaults for:";
      for (const auto& k : parsed.defaulted) err << ' ' << k;
      err << '\n';
    }
    if (csv_path) cfg.csv_path = *csv_path;
    if (svg_path) cfg.svg_path = *svg_path;
    if (tolerance) cfg.tolerance = *tolerance;
    if (levels) cfg.levels = *levels;
    validate_config(cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (dump) {
    out << dump_config(cfg);
    return kExitOk;
  }
  if (command.empty()) {
    err << "usage error: a command is required (analytic, figure3, oracle, converge)\n" << app.help();
    return kExitConfig;
  }

  try {
    if (command == "analytic") return cmd_analytic(cfg, out);
    if (command == "figure3") return cmd_figure3(cfg, jobs, out, err);
    if (command == "oracle") return cmd_oracle(cfg, out, err);
    return cmd_converge(cfg, jobs, out, err);
  } catch (const StepSizeError& e) {
    err << "instability: " << e.what() << '\n';
    return kExitInstability;
  } catch (const OutputError& e) {
    err << "output error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace crase
