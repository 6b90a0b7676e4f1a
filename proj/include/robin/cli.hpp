#pragma once

#include <iosfwd>

namespace robin {

/// Exit codes: 0 success, 2 validation error, 3 solver error, 4 I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitIo = 4;

/// Full command-line front end; main() forwards here. Kept as a library
/// function so the exit-code contract and byte-level output determinism are
/// testable in-process.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace robin
