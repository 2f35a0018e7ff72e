#pragma once

// Flat `key = value` run configuration. `#` starts a comment, blank lines are
// ignored, keys may appear at most once and unknown keys are rejected. Every
// error is a ConfigError naming the key and line when they exist.

#include <crase/oracle.hpp>
#include <crase/sweep.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace crase {

struct RunConfig {
  OracleConfig oracle{};
  SweepSpec sweep{};
  double tolerance{0.1};  // max analytic delta accepted by `oracle` and `converge`
  int levels{3};          // refinement levels for `converge`
  std::string csv_path;   // empty: no CSV
  std::string svg_path;   // empty: no SVG
};

struct ParsedConfig {
  RunConfig config;
  std::vector<std::string> defaulted;  // keys not present in the input, in canonical order
};

/// Every recognised key, in the order dump_config writes them.
const std::vector<std::string>& config_keys();

ParsedConfig parse_config_text(std::string_view text);
ParsedConfig parse_config(const std::filesystem::path& path);

/// Range and consistency checks; `lines` maps keys to source lines for error
/// messages (missing keys report line 0).
void validate_config(const RunConfig& config, const std::vector<std::pair<std::string, int>>& lines = {});

/// Canonical text form: one line per key, shortest round-trip numbers.
std::string dump_config(const RunConfig& config);

}  // namespace crase
