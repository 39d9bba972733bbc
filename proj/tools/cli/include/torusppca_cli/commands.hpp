#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace torusppca::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitError = 2,
  kExitNotConverged = 3,
};

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Tool version string embedded in model files and manifests.
const char* tool_version();

}  // namespace torusppca::cli
