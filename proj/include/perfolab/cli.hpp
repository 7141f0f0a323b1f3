#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace perfolab {

enum ExitCode : int {
  kExitOk = 0,
  kExitPropertyFailure = 1,
  kExitInputError = 2,
  kExitResourceRefusal = 3,
};

/// Runs one subcommand; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace perfolab
