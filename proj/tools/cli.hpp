#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace selfavg::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_validation = 2;
inline constexpr int exit_capacity = 3;

/// Runs one invocation; `args` excludes the program name. Results go to `out`
/// (or the configured output path), diagnostics to `err`.
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace selfavg::cli
