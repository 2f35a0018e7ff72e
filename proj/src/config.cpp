#include <crase/config.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace crase {

namespace {

enum class Kind { real, integer, text };

struct KeySpec {
  const char* name;
  Kind kind;
  std::function<void(RunConfig&, double)> set_real;
  std::function<void(RunConfig&, long long)> set_int;
  std::function<void(RunConfig&, const std::string&)> set_text;
  std::function<std::string(const RunConfig&)> get;
};

std::string shortest(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

// `getter` is a generic lambda returning a (const) reference into RunConfig.
template <typename Member>
KeySpec real_key(const char* name, Member getter) {
  return {name, Kind::real, [getter](RunConfig& c, double v) { getter(c) = v; }, {}, {},
          [getter](const RunConfig& c) { return shortest(getter(c)); }};
}

template <typename Member>
KeySpec int_key(const char* name, Member getter) {
  return {name, Kind::integer, {}, [getter](RunConfig& c, long long v) { getter(c) = static_cast<int>(v); }, {},
          [getter](const RunConfig& c) { return std::to_string(getter(c)); }};
}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    std::vector<KeySpec> t;
    t.push_back(real_key("gamma_b1", [](auto& c) -> auto& { return c.oracle.rates.gamma_b1; }));
    t.push_back(real_key("gamma_a1", [](auto& c) -> auto& { return c.oracle.rates.gamma_a1; }));
    t.push_back(real_key("gamma_b2", [](auto& c) -> auto& { return c.oracle.rates.gamma_b2; }));
    t.push_back(real_key("gamma_a2", [](auto& c) -> auto& { return c.oracle.rates.gamma_a2; }));
    t.push_back(int_key("m_oscillators", [](auto& c) -> auto& { return c.oracle.m_oscillators; }));
    t.push_back(real_key("delta_max", [](auto& c) -> auto& { return c.oracle.delta_max; }));
    t.push_back(real_key("dt", [](auto& c) -> auto& { return c.oracle.dt; }));
    t.push_back(real_key("t_region", [](auto& c) -> auto& { return c.oracle.t_region; }));
    t.push_back(real_key("mode_sigma", [](auto& c) -> auto& { return c.oracle.mode_sigma; }));
    t.push_back(real_key("mode_center", [](auto& c) -> auto& { return c.oracle.mode_center; }));
    t.push_back(real_key("sqrt_eps_min", [](auto& c) -> auto& { return c.sweep.sqrt_eps.min; }));
    t.push_back(real_key("sqrt_eps_max", [](auto& c) -> auto& { return c.sweep.sqrt_eps.max; }));
    t.push_back(int_key("sqrt_eps_steps", [](auto& c) -> auto& { return c.sweep.sqrt_eps.steps; }));
    t.push_back(real_key("cosh_chi_min", [](auto& c) -> auto& { return c.sweep.cosh_chi.min; }));
    t.push_back(real_key("cosh_chi_max", [](auto& c) -> auto& { return c.sweep.cosh_chi.max; }));
    t.push_back(int_key("cosh_chi_steps", [](auto& c) -> auto& { return c.sweep.cosh_chi.steps; }));
    t.push_back({"theta_policy", Kind::text, {}, {},
                 [](RunConfig& c, const std::string& v) { c.sweep.policy = theta_policy_from_string(v); },
                 [](const RunConfig& c) { return to_string(c.sweep.policy); }});
    t.push_back(real_key("theta_fixed", [](auto& c) -> auto& { return c.sweep.theta_fixed; }));
    t.push_back(real_key("tolerance", [](auto& c) -> auto& { return c.tolerance; }));
    t.push_back(int_key("levels", [](auto& c) -> auto& { return c.levels; }));
    t.push_back({"csv_path", Kind::text, {}, {}, [](RunConfig& c, const std::string& v) { c.csv_path = v; },
                 [](const RunConfig& c) { return c.csv_path; }});
    t.push_back({"svg_path", Kind::text, {}, {}, [](RunConfig& c, const std::string& v) { c.svg_path = v; },
                 [](const RunConfig& c) { return c.svg_path; }});
    return t;
  }();
  return table;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string at_line(int line) { return line > 0 ? "line " + std::to_string(line) + ": " : std::string(); }

double parse_real(std::string_view text, const std::string& key, int line) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw ConfigError(at_line(line) + key + ": expected a finite number, got '" + std::string(text) + "'", key, line);
  }
  return v;
}

long long parse_integer(std::string_view text, const std::string& key, int line) {
  long long v = 0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != end || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError(at_line(line) + key + ": expected an integer, got '" + std::string(text) + "'", key, line);
  }
  return v;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const KeySpec& s : key_table()) k.emplace_back(s.name);
    return k;
  }();
  return keys;
}

void validate_config(const RunConfig& c, const std::vector<std::pair<std::string, int>>& lines) {
  auto fail = [&](const std::string& key, const std::string& message) {
    int line = 0;
    for (const auto& [k, l] : lines) {
      if (k == key) line = l;
    }
    throw ConfigError(at_line(line) + key + ": " + message, key, line);
  };
  const RateParams& r = c.oracle.rates;
  for (auto [key, v] : {std::pair{"gamma_b1", r.gamma_b1}, std::pair{"gamma_a1", r.gamma_a1},
                        std::pair{"gamma_b2", r.gamma_b2}, std::pair{"gamma_a2", r.gamma_a2}}) {
    if (!(v >= 0)) fail(key, "must be non-negative");
  }
  try {
    rates_to_chi(r.gamma_b1, r.gamma_a1);
  } catch (const InvalidArgument& e) {
    fail("gamma_a1", e.what());
  }
  if (!(r.gamma_b2 + r.gamma_a2 > 0)) fail("gamma_b2", "gamma_b2 + gamma_a2 must be positive");

  const OracleConfig& o = c.oracle;
  if (o.m_oscillators < 3 || o.m_oscillators % 2 == 0) fail("m_oscillators", "must be an odd integer >= 3");
  if (!(o.delta_max > 0)) fail("delta_max", "must be positive");
  if (!(o.dt > 0)) fail("dt", "must be positive");
  if (!(o.t_region > 0)) fail("t_region", "must be positive");
  if (!(o.mode_sigma > 0)) fail("mode_sigma", "must be positive");
  if (!(o.mode_center > 0)) fail("mode_center", "must be positive");
  const double reach = TemporalMode::kTruncation * o.mode_sigma;
  if (o.mode_center + reach > o.t_region) fail("mode_center", "mode_center + 5*mode_sigma must not exceed t_region");
  if (o.mode_center - reach < 0) fail("mode_center", "mode_center - 5*mode_sigma must be >= 0");
  if (o.steps() < 2) fail("dt", "t_region must span at least two time steps");

  const SweepSpec& s = c.sweep;
  if (s.sqrt_eps.min < 0) fail("sqrt_eps_min", "must be >= 0");
  if (s.sqrt_eps.max > 0.99) fail("sqrt_eps_max", "must be <= 0.99");
  if (!(s.sqrt_eps.min < s.sqrt_eps.max)) fail("sqrt_eps_max", "must exceed sqrt_eps_min");
  if (s.sqrt_eps.steps < 2) fail("sqrt_eps_steps", "must be >= 2");
  if (s.cosh_chi.min < 1) fail("cosh_chi_min", "must be >= 1");
  if (!(s.cosh_chi.min < s.cosh_chi.max)) fail("cosh_chi_max", "must exceed cosh_chi_min");
  if (s.cosh_chi.steps < 2) fail("cosh_chi_steps", "must be >= 2");
  if (!(s.theta_fixed > 0 && s.theta_fixed < 1)) fail("theta_fixed", "must lie in (0, 1)");
  if (!(c.tolerance > 0)) fail("tolerance", "must be positive");
  if (c.levels < 2) fail("levels", "a convergence study needs at least 2 levels");
}

ParsedConfig parse_config_text(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);  // UTF-8 byte order mark
  ParsedConfig out;
  std::map<std::string, int> seen;
  const auto& table = key_table();

  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(at_line(line_no) + "expected 'key = value', got '" + std::string(line) + "'", {}, line_no);
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(at_line(line_no) + "missing key before '='", {}, line_no);

    const auto spec = std::find_if(table.begin(), table.end(), [&](const KeySpec& s) { return key == s.name; });
    if (spec == table.end()) throw ConfigError(at_line(line_no) + "unknown key '" + key + "'", key, line_no);
    if (const auto prev = seen.find(key); prev != seen.end()) {
      throw ConfigError(at_line(line_no) + "duplicate key '" + key + "' (first set on line " +
                            std::to_string(prev->second) + ")",
                        key, line_no);
    }
    seen.emplace(key, line_no);

    switch (spec->kind) {
      case Kind::real:
        spec->set_real(out.config, parse_real(value, key, line_no));
        break;
      case Kind::integer:
        spec->set_int(out.config, parse_integer(value, key, line_no));
        break;
      case Kind::text:
        try {
          spec->set_text(out.config, std::string(value));
        } catch (const InvalidArgument& e) {
          throw ConfigError(at_line(line_no) + key + ": " + e.what(), key, line_no);
        }
        break;
    }
  }

  for (const KeySpec& s : table) {
    if (!seen.count(s.name)) out.defaulted.emplace_back(s.name);
  }
  validate_config(out.config, {seen.begin(), seen.end()});
  return out;
}

ParsedConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  for (const KeySpec& s : key_table()) {
    out += s.name;
    out += " = ";
    out += s.get(config);
    out += '\n';
  }
  return out;
}

}  // namespace crase
