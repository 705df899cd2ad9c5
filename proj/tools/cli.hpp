#pragma once

#include <iosfwd>

namespace step::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `step` tool. Usage and configuration problems return
// kExitUsage, anything else that fails kExitRuntime.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace step::cli
