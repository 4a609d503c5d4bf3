#pragma once

#include <iosfwd>

namespace rkevo::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInfeasible = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point of the `rkevo` binary; output and diagnostics go to the given streams.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace rkevo::cli
