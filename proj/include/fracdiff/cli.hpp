#pragma once

// Batch front end: parse flags and the run-config file, dispatch a subcommand, write CSV
// artifacts and summary.txt into the output directory.

#include <iosfwd>
#include <string>
#include <vector>

namespace fracdiff::cli {

/// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kValidationFailed = 2;
inline constexpr int kInconclusive = 3;

/// args excludes the program name, e.g. {"solve", "--config", "run.toml", "--set", "mc.paths=1000"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fracdiff::cli
