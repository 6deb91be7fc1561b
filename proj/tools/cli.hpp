#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace drfuse::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes by failure class.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitSolver = 4;

/// Runs the command line `args` (without the program name). Normal output goes to
/// `out`, diagnostics to `err`; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a hash rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace drfuse::cli
