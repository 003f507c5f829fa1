#pragma once

#include <string>
#include <vector>

namespace adr::cli {

// Exit codes: 0 success, 1 unexpected failure, 2 usage/config error,
// 3 data or data/model mismatch.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitMismatch = 3;

int run(int argc, char** argv);
// `args` excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace adr::cli
