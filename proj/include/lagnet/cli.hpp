#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lagnet {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;

// Entry point for the `lagnet` tool. args excludes the program name.
// Returns 0 on success, 1 on runtime/fit failure, 2 on usage or validation errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lagnet
