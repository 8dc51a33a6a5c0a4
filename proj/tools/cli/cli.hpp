#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cernet::cli {

// Exit codes: 0 success, 1 runtime or numeric failure, 2 argument or
// schema error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cernet::cli
