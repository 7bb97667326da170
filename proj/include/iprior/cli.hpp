#pragma once

#include <iosfwd>
#include <string>

namespace iprior {

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_numerical = 2 };

/// Entry point behind the iprior executable. Usage goes to `err`; progress
/// summaries go to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Writes through a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace iprior
