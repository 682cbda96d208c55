#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rssh::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kBadArgs = 2,
  kIoError = 3,
  kNumericFailure = 4,
  kCheckFailed = 5,
};

/// Runs the `rssh` command line. argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload for tests: args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rssh::cli
