#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <vector>

namespace sysid::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumeric = 2, kIo = 3 };

/// 1 for invalid arguments or configs, 2 for numeric and regime failures,
/// 3 for I/O failures.
int exit_code_for(const std::exception& e);

/// Parses `args` (without the program name) and runs the subcommand.
/// Progress goes to `out` unless --quiet; errors and usage go to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sysid::cli
