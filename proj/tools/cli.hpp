#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace alo::cli {

enum ExitCode : int {
  kOk = 0,
  kBadFlags = 2,
  kDataError = 3,
  kNumericalFailure = 4,
};

// Runs one command line. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace alo::cli
