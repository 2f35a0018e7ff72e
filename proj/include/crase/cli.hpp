#pragma once

#include <iosfwd>

namespace crase {

/// Process exit codes of the `crase` tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,          // bad config, usage error or unwritable output
  kExitClaimViolation = 3,  // a sweep cell failed to show entanglement
  kExitTolerance = 4,       // oracle deltas above tolerance or not converging
  kExitInstability = 5,     // integrator blew up or produced non-finite moments
};

/// Full command-line entry point; writes results to `out` and diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace crase
