#pragma once

// Command-line front end. Exit codes: 0 ok, 1 oracle check failed, 2 bad
// configuration or input, 3 runtime error.

#include <iosfwd>
#include <string>
#include <vector>

namespace oag {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOracleFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// `args` excludes the program name.
int oag_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace oag
