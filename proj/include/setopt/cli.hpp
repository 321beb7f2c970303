#pragma once

#include <iosfwd>

namespace setopt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitMaxIterations = 2;
inline constexpr int kExitFailure = 3;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitIo = 74;

/// Entry point of the `setopt` tool: verbs solve, bench, plot-data, check.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace setopt
