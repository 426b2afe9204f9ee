#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tgmrf::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 2, kDataError = 3, kNumericalFailure = 4 };

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootVariable = "TGMRF_OUTPUT_ROOT";

/// Runs one command line (without the program name). Normal output goes to
/// `out`; errors and the per-checkpoint log go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tgmrf::cli
