#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ridematch::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,   // bad flags, scenario, PPO config, policy spec or checkpoint contents
  kIoError = 3,       // a file could not be read or written
  kNumericError = 4,  // training stopped on a non-finite loss or gradient
};

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ridematch::cli
