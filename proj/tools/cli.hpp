#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace phnmf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;

/// Runs one command line (without the program name). Errors are reported
/// on `err` and mapped to exit codes: 2 for invalid input, 3 for I/O.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace phnmf::cli
