#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fastre::cli {

/// Runs one command line (args excludes the program name). Primary JSON
/// results go to `out`, diagnostics and "ERROR:" lines to `err`.
/// Returns 0 on success, 1 on invalid input, 2 on a runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fastre::cli
