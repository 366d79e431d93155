#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cvcert {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitBelowThreshold = 2;

/// Runs one command line (without the program name). Reports go to `out`,
/// diagnostics and warnings to `err`. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cvcert
