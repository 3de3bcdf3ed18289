#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ptag::cli {

enum ExitCode : int {
  kOk = 0,
  kInconsistent = 1,
  kValidationErrors = 2,
  kIndeterminate = 3,
  kBudgetExceeded = 70,
  kUsage = 64,
  kMalformedInput = 65,
  kUnreadableInput = 66,
};

/// Runs one command; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ptag::cli
