#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ked::cli {

enum ExitCode : int {
  kOk = 0,
  kVerifyFailed = 1,
  kUnsupported = 2,
  kInvalid = 3,
  kNumerical = 4,
};

/// Runs the `ked` command line. args[0] is the program name. The result
/// JSON goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ked::cli
