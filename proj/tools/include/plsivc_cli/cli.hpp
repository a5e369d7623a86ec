#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace plsivc::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

/// Runs one command line (without the program name). Result files go under
/// --out-dir; `out` gets a short human-readable report and `err` gets one
/// JSON object per error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace plsivc::cli
