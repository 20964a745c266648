#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tmr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitPartial = 3;

/// Entry point of the `tmr` command; args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tmr
