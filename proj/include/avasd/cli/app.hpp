#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace avasd::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

/// Parses `args` (without the program name), runs the subcommand and maps
/// failures onto exit codes. Progress and reports go to `out`, diagnostics
/// to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace avasd::cli
