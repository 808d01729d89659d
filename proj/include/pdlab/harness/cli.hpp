#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pdlab::harness {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInternal = 3 };

/// Runs the command line tool on `args` (program name excluded).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pdlab::harness
