#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dcre::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kDependency = 3, kNumeric = 4, kFailure = 1 };

/// Parses argv-style arguments (without the program name) and runs the command.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dcre::cli
