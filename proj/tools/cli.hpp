#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "antman/config.hpp"

namespace antman::cli {

enum ExitCode : int { kSuccess = 0, kValidationFailure = 1, kUsageError = 2 };

/// Runs one command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "lgp-shuffle:g=10", "lowrank-lgp:r=2,g_in=2,g_out=2", "lgp-dense:g=4,mix=before".
/// A bare "g" for lowrank-lgp sets both g_in and g_out. Dims are left at 0.
CompressionConfig parse_shape(const std::string& text);

}  // namespace antman::cli
