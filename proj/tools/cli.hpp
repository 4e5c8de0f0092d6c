#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mklpo::cli {

enum ExitCode : int { ok = 0, usage_error = 1, data_error = 2, solver_error = 3 };

/// Runs one command line. `args` excludes the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

/// Shortest decimal that reads back to the same double.
std::string format_number(double value);

}  // namespace mklpo::cli
