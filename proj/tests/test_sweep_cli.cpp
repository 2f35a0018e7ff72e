#include <crase/cli.hpp>
#include <crase/config.hpp>
#include <crase/contour.hpp>
#include <crase/sweep.hpp>

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace crase;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("crase_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name, std::ios::binary) << text;
    return path / name;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "crase");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

SweepSpec corners() {
  SweepSpec s;
  s.sqrt_eps = {0.0, 0.9, 2};
  s.cosh_chi = {1.01, 3.0, 2};
  return s;
}

}  // namespace

// -- sweep ---------------------------------------------------------------------

TEST_CASE("sweep ranges and validation") {
  const SweepRange r{0.0, 0.99, 51};
  CHECK(r.at(0) == 0.0);
  CHECK(r.at(50) == 0.99);
  CHECK(r.at(10) == 0.198);
  CHECK(SweepSpec{}.sqrt_eps.steps == 51);
  CHECK(SweepSpec{}.cosh_chi.steps == 60);
  CHECK_NOTHROW(SweepSpec{}.validate());

  SweepSpec bad;
  bad.cosh_chi = {2.0, 2.0, 2};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = SweepSpec{};
  bad.sqrt_eps = {0.0, 0.995, 5};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = SweepSpec{};
  bad.sqrt_eps.steps = 1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = SweepSpec{};
  bad.cosh_chi = {0.5, 2.0, 4};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(theta_policy_from_string("best"), InvalidArgument);
}

TEST_CASE("corner grid") {
  const std::vector<SweepCell> cells = run_sweep(corners());
  REQUIRE(cells.size() == 4);
  for (const SweepCell& c : cells) {
    CHECK(c.duan_min < 1.0);
    const SqueezeParams p{std::acosh(c.cosh_chi), c.sqrt_eps * c.sqrt_eps};
    CHECK(c.duan_min <= duan_sum_closed(p, clip_theta(theta_star_witness(p.eps))));
  }
  CHECK(cells[0].sqrt_eps == 0.0);
  CHECK(cells[1].cosh_chi == 3.0);
  CHECK(cells[2].sqrt_eps == 0.9);
}

TEST_CASE("impedance-matched row is e^{-2 chi}") {
  const std::vector<SweepCell> cells = run_sweep(SweepSpec{});
  for (int c = 0; c < 60; ++c) {
    const SweepCell& cell = cells[static_cast<std::size_t>(c)];
    CHECK(cell.sqrt_eps == 0.0);
    CHECK(std::abs(cell.duan_min - std::exp(-2 * std::acosh(cell.cosh_chi))) <= 1e-9);
  }
}

TEST_CASE("sweep order does not depend on worker count") {
  const std::vector<SweepCell> one = run_sweep(SweepSpec{}, 1);
  const std::vector<SweepCell> many = run_sweep(SweepSpec{}, 4);
  REQUIRE(one.size() == many.size());
  for (std::size_t k = 0; k < one.size(); ++k) {
    CHECK(one[k].sqrt_eps == many[k].sqrt_eps);
    CHECK(one[k].cosh_chi == many[k].cosh_chi);
    CHECK(one[k].duan_min == many[k].duan_min);
  }
}

TEST_CASE("theta policies") {
  SweepSpec s = corners();
  s.policy = ThetaPolicy::witness;
  for (const SweepCell& c : run_sweep(s)) {
    CHECK(c.theta_star == Approx(clip_theta((1 - c.sqrt_eps * c.sqrt_eps) / (2 - c.sqrt_eps * c.sqrt_eps))));
  }
  s.policy = ThetaPolicy::fixed;
  s.theta_fixed = 0.3;
  for (const SweepCell& c : run_sweep(s)) CHECK(c.theta_star == 0.3);
}

TEST_CASE("CSV round trip and re-minimization") {
  const SweepSpec spec{};
  const std::vector<SweepCell> cells = run_sweep(spec);
  std::stringstream csv;
  write_sweep_csv(csv, cells);
  CHECK(csv.str().rfind("sqrt_eps,cosh_chi,theta_star,duan_min\n", 0) == 0);
  CHECK(csv.str().find(';') == std::string::npos);
  const std::vector<SweepCell> back = read_sweep_csv(csv);
  REQUIRE(back.size() == cells.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].sqrt_eps == cells[k].sqrt_eps);
    CHECK(back[k].cosh_chi == cells[k].cosh_chi);
    const SweepCell again = evaluate_cell(spec, back[k].sqrt_eps, back[k].cosh_chi);
    CHECK(std::abs(again.duan_min - back[k].duan_min) <= 1e-9);
  }
  std::istringstream bad("a,b,c,d\n1,2,3,4\n");
  CHECK_THROWS_AS(read_sweep_csv(bad), InvalidArgument);
  std::istringstream short_row("sqrt_eps,cosh_chi,theta_star,duan_min\n1,2,3\n");
  CHECK_THROWS_AS(read_sweep_csv(short_row), InvalidArgument);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.0717967697244908) == "0.0717967697");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(-3.4641016151377544) == "-3.46410162");
  CHECK(format_number(1.5e-12) == "1.5e-12");
}

// -- contouring ------------------------------------------------------------------

TEST_CASE("marching squares on a plane") {
  const std::vector<double> xs{0, 1, 2, 3}, ys{0, 1, 2};
  std::vector<double> z;
  for (double y : ys) {
    for (double x : xs) z.push_back(x + 0 * y);
  }
  const auto segs = marching_squares(xs, ys, z, 1.5);
  REQUIRE(segs.size() == 2);
  for (const Segment& s : segs) {
    CHECK(s.a.x == Approx(1.5));
    CHECK(s.b.x == Approx(1.5));
  }
  CHECK(marching_squares(xs, ys, z, 10.0).empty());
  CHECK_THROWS_AS(marching_squares(xs, ys, std::vector<double>(3), 0.5), InvalidArgument);
}

TEST_CASE("marching squares traces a circle") {
  std::vector<double> xs, ys, z;
  for (int k = 0; k <= 40; ++k) xs.push_back(-1 + k * 0.05);
  ys = xs;
  for (double y : ys) {
    for (double x : xs) z.push_back(x * x + y * y);
  }
  const auto segs = marching_squares(xs, ys, z, 0.25);
  CHECK(segs.size() > 20);
  double length = 0;
  for (const Segment& s : segs) {
    CHECK(std::hypot(s.a.x, s.a.y) == Approx(0.5).epsilon(0.01));
    length += std::hypot(s.b.x - s.a.x, s.b.y - s.a.y);
  }
  CHECK(length == Approx(std::numbers::pi).epsilon(0.01));
}

TEST_CASE("saddle cells give two segments") {
  const std::vector<double> xs{0, 1}, ys{0, 1};
  const std::vector<double> z{1, 0, 1, 0};  // rows: (1, 0), (1, 0)?  use a real saddle below
  const std::vector<double> saddle{1, 0, 0, 1};
  CHECK(marching_squares(xs, ys, saddle, 0.5).size() == 2);
  CHECK(marching_squares(xs, ys, z, 0.5).size() == 1);
}

TEST_CASE("SVG rendering") {
  const SweepSpec spec{};
  const auto cells = run_sweep(spec);
  const std::string svg = render_contour_svg(spec, cells);
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("version=\"1.1\"") != std::string::npos);
  for (double level : kContourLevels) {
    CHECK(svg.find("data-level=\"" + format_number(level) + "\"") != std::string::npos);
  }
  CHECK(svg.find("nan") == std::string::npos);
  CHECK(svg.find("<line") != std::string::npos);
  CHECK(svg == render_contour_svg(spec, cells));
  CHECK_THROWS_AS(render_contour_svg(corners(), cells), InvalidArgument);
}

// -- configuration ---------------------------------------------------------------

TEST_CASE("empty config uses defaults") {
  const ParsedConfig p = parse_config_text("");
  CHECK(p.defaulted == config_keys());
  CHECK(p.config.oracle.m_oscillators == OracleConfig{}.m_oscillators);
  CHECK(p.config.tolerance == 0.1);
  const ParsedConfig q = parse_config_text("# only a comment\n\n   \n");
  CHECK(q.defaulted.size() == config_keys().size());
}

TEST_CASE("config parsing") {
  const ParsedConfig p = parse_config_text(
      "\xEF\xBB\xBF# rates\n"
      "gamma_b1 = 3   # trailing comment\n"
      "gamma_a1=1\n"
      "theta_policy = witness\n"
      "csv_path = out dir/grid.csv\n"
      "m_oscillators = 101\n");
  CHECK(p.config.oracle.rates.gamma_b1 == 3.0);
  CHECK(p.config.oracle.rates.gamma_a1 == 1.0);
  CHECK(p.config.sweep.policy == ThetaPolicy::witness);
  CHECK(p.config.csv_path == "out dir/grid.csv");
  CHECK(p.config.oracle.m_oscillators == 101);
  CHECK(std::find(p.defaulted.begin(), p.defaulted.end(), "gamma_b1") == p.defaulted.end());
  CHECK(std::find(p.defaulted.begin(), p.defaulted.end(), "gamma_b2") != p.defaulted.end());
}

TEST_CASE("config errors name the key and line") {
  auto error_of = [](const std::string& text) -> ConfigError {
    try {
      parse_config_text(text);
    } catch (const ConfigError& e) {
      return e;
    }
    FAIL("expected a ConfigError");
    return ConfigError("");
  };
  const ConfigError threshold = error_of("gamma_a1 = 2\ngamma_b1 = 1\n");
  CHECK(threshold.key() == "gamma_a1");
  CHECK(threshold.line() == 1);
  CHECK(std::string(threshold.what()).find("below the lasing threshold") != std::string::npos);

  const ConfigError unknown = error_of("dt = 0.01\ngamma = 3\n");
  CHECK(unknown.key() == "gamma");
  CHECK(unknown.line() == 2);

  const ConfigError dup = error_of("dt = 0.01\n\ndt = 0.02\n");
  CHECK(dup.key() == "dt");
  CHECK(dup.line() == 3);
  CHECK(std::string(dup.what()).find("line 1") != std::string::npos);

  const ConfigError type = error_of("m_oscillators = 2.5\n");
  CHECK(type.key() == "m_oscillators");
  CHECK(error_of("dt = fast\n").key() == "dt");
  CHECK(error_of("dt = 1,5\n").key() == "dt");
  CHECK(error_of("m_oscillators = 100\n").key() == "m_oscillators");
  CHECK(error_of("theta_policy = best\n").key() == "theta_policy");
  CHECK(error_of("sqrt_eps_max = 0.999\n").key() == "sqrt_eps_max");
  CHECK(error_of("cosh_chi_min = 2\ncosh_chi_max = 2\n").key() == "cosh_chi_max");
  CHECK(error_of("mode_sigma = 100\n").key() == "mode_center");
  CHECK(error_of("levels = 1\n").key() == "levels");
  CHECK(error_of("no equals sign\n").line() == 1);
  CHECK_THROWS_AS(parse_config("/nonexistent/crase.cfg"), ConfigError);
}

TEST_CASE("dump-config round trip is bit-identical") {
  RunConfig c;
  c.oracle.rates.gamma_a1 = 0.1 + 0.2;  // not representable in few digits
  c.oracle.dt = 1.0 / 3.0 / 100.0;
  c.sweep.theta_fixed = 0.123456789012345678;
  c.sweep.policy = ThetaPolicy::fixed;
  c.svg_path = "fig.svg";
  const std::string text = dump_config(c);
  const ParsedConfig back = parse_config_text(text);
  CHECK(back.defaulted.empty());
  CHECK(back.config.oracle.rates.gamma_a1 == c.oracle.rates.gamma_a1);
  CHECK(back.config.oracle.dt == c.oracle.dt);
  CHECK(back.config.sweep.theta_fixed == c.sweep.theta_fixed);
  CHECK(dump_config(back.config) == text);
}

// -- command line ----------------------------------------------------------------

TEST_CASE("cli analytic") {
  const CliRun r = cli({"analytic"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("duan_min       0.0717967697") != std::string::npos);
  CHECK(r.out.find("n_ase          3\n") != std::string::npos);
  CHECK(r.err.find("notice: using defaults for: gamma_b1") != std::string::npos);

  TempDir dir;
  const auto boundary = dir.write("b.cfg", "gamma_b1 = 1\ngamma_a1 = 0\ngamma_b2 = 1\ngamma_a2 = 0\n");
  const CliRun b = cli({"analytic", "--config", boundary.string()});
  CHECK(b.code == kExitOk);
  CHECK(b.out.find("no entanglement (boundary)") != std::string::npos);
  CHECK(b.out.find("duan_min       1\n") != std::string::npos);

  const auto witness = dir.write("w.cfg", "gamma_b1 = 3\ngamma_a1 = 1\ngamma_b2 = 3\ngamma_a2 = 1\n");
  const auto csv = dir.path / "a.csv";
  const CliRun w = cli({"analytic", "--config", witness.string(), "--csv", csv.string()});
  CHECK(w.code == kExitOk);
  const std::string table = slurp(csv);
  CHECK(table.rfind("chi,cosh_chi,eps,", 0) == 0);
  std::istringstream lines(table);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  std::vector<std::string> fields;
  std::istringstream split(row);
  for (std::string f; std::getline(split, f, ',');) fields.push_back(f);
  REQUIRE(fields.size() == 12);
  CHECK(std::stod(fields[2]) == Approx(0.25));
  CHECK(std::stod(fields[8]) <= 0.2046);

  const auto bad = dir.write("bad.cfg", "gamma_a1 = 2\ngamma_b1 = 1\n");
  const CliRun e = cli({"analytic", "--config", bad.string()});
  CHECK(e.code == kExitConfig);
  CHECK(e.err.find("below the lasing threshold") != std::string::npos);
  CHECK(e.err.find("line 1") != std::string::npos);
}

TEST_CASE("cli figure3") {
  TempDir dir;
  const auto cfg = dir.write("f.cfg", "sqrt_eps_min = 0\nsqrt_eps_max = 0.9\nsqrt_eps_steps = 2\n"
                                      "cosh_chi_min = 1.01\ncosh_chi_max = 3\ncosh_chi_steps = 2\n");
  const auto csv = dir.path / "grid.csv";
  const auto svg = dir.path / "grid.svg";
  const CliRun r = cli({"figure3", "--config", cfg.string(), "--csv", csv.string(), "--svg", svg.string()});
  CHECK(r.code == kExitOk);
  std::ifstream in(csv);
  const auto cells = read_sweep_csv(in);
  CHECK(cells.size() == 4);
  for (const auto& c : cells) CHECK(c.duan_min < 1.0);
  CHECK(slurp(svg).find("</svg>") != std::string::npos);

  // Without --csv the grid goes to stdout.
  const CliRun stdout_run = cli({"figure3", "--config", cfg.string()});
  CHECK(stdout_run.out.rfind("sqrt_eps,cosh_chi,theta_star,duan_min", 0) == 0);

  // cosh χ = 1 is the vacuum boundary: the sentinel must fire.
  const auto edge = dir.write("e.cfg", "cosh_chi_min = 1\ncosh_chi_max = 2\ncosh_chi_steps = 3\nsqrt_eps_steps = 2\n");
  const CliRun sentinel = cli({"figure3", "--config", edge.string(), "--csv", (dir.path / "e.csv").string()});
  CHECK(sentinel.code == kExitClaimViolation);

  // A fixed θ far from the optimum is not a claim violation.
  const auto fixed = dir.write("x.cfg", "theta_policy = fixed\ntheta_fixed = 0.02\n");
  CHECK(cli({"figure3", "--config", fixed.string(), "--csv", (dir.path / "x.csv").string()}).code == kExitOk);

  const auto degenerate = dir.write("d.cfg", "cosh_chi_min = 2\ncosh_chi_max = 2\ncosh_chi_steps = 2\n");
  CHECK(cli({"figure3", "--config", degenerate.string()}).code == kExitConfig);
}

TEST_CASE("cli oracle exit codes") {
  TempDir dir;
  const std::string small = "m_oscillators = 201\ndelta_max = 10\ndt = 0.01\nt_region = 60\n";
  const auto broadband = dir.write("bb.cfg", small + "mode_sigma = 2\nmode_center = 30\n");
  const CliRun bb = cli({"oracle", "--config", broadband.string()});
  CHECK(bb.code == kExitTolerance);
  CHECK(bb.err.find("warning: temporal mode is not narrowband") != std::string::npos);

  const auto quiet = dir.write("q.cfg", small + "mode_sigma = 5\nmode_center = 30\ngamma_a1 = 0\n");
  const auto csv = dir.path / "q.csv";
  const CliRun q = cli({"oracle", "--config", quiet.string(), "--csv", csv.string()});
  CHECK(q.code == kExitOk);
  CHECK(slurp(csv).rfind("quantity,oracle,analytic,delta\n", 0) == 0);

  const auto unstable = dir.write("u.cfg", "m_oscillators = 201\ndelta_max = 10\ndt = 0.5\nt_region = 60\n"
                                           "mode_sigma = 5\nmode_center = 30\n");
  CHECK(cli({"oracle", "--config", unstable.string()}).code == kExitInstability);
}

TEST_CASE("cli converge plumbing") {
  CHECK(cli({"converge", "--levels", "1"}).code == kExitConfig);
  TempDir dir;
  const auto quiet = dir.write("q.cfg", "m_oscillators = 21\ndelta_max = 3\ndt = 0.05\nt_region = 12\n"
                                        "mode_sigma = 1\nmode_center = 6\ngamma_a1 = 0\n");
  const CliRun r = cli({"converge", "--config", quiet.string(), "--levels", "2", "--jobs", "2"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("monotone yes") != std::string::npos);
}

TEST_CASE("cli usage and dump") {
  CHECK(cli({}).code == kExitConfig);
  CHECK(cli({"bogus"}).code == kExitConfig);
  CHECK(cli({"analytic", "--jobs", "0"}).code == kExitConfig);
  CHECK(cli({"--help"}).code == kExitOk);

  TempDir dir;
  const CliRun dump = cli({"--dump-config", "--tolerance", "0.05"});
  CHECK(dump.code == kExitOk);
  CHECK(dump.out.find("tolerance = 0.05\n") != std::string::npos);
  const auto file = dir.write("dump.cfg", dump.out);
  const CliRun again = cli({"--dump-config", "--config", file.string()});
  CHECK(again.out == dump.out);
  CHECK(again.err.find("notice") == std::string::npos);
}
