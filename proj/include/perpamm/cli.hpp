#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace perpamm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

// Runs one invocation. `args` excludes the program name. Domain errors are
// reported on `err` as a single `ERROR <code>: <message>` line.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace perpamm::cli
