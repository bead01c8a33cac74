#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace depara::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
inline constexpr int exit_ok = 0;
inline constexpr int exit_runtime = 1;
inline constexpr int exit_usage = 2;

/// Runs the command line `args` (without the program name). Data goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace depara::cli
