#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vill {

// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumeric = 2, kExitIo = 3 };

// Entry point for the `vill` tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vill
