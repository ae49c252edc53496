#pragma once

#include <iosfwd>

namespace caldoe::cli {

/// Exit codes.
inline constexpr int kSuccess = 0;
inline constexpr int kValidation = 1;
inline constexpr int kNumerical = 2;

/// Runs one command (design, calibrate, study, surrogate-fit). Reports go to
/// `out`, diagnostics and --verbose progress to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace caldoe::cli
