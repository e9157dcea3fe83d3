#pragma once

#include <iosfwd>

namespace lcsim::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kValidation = 3,
  kStatistical = 4,
};

/// Runs one subcommand (analytic, scan, simulate, uniqueness, trivial).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lcsim::cli
