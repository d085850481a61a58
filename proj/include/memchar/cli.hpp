#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace memchar {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPinning = 3;
inline constexpr int kExitBackend = 4;
inline constexpr int kExitVerification = 5;

// Runs one command; `args` excludes the program name. Nothing is written to the
// output directory unless the whole command succeeds.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace memchar
