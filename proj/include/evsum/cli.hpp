#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace evsum {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Runs one `evsum` command line. `args` excludes the program name. Results go
/// to `out` (or the --out file), diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace evsum
