#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tailtopo::cli {

enum ExitCode : int { ok = 0, internal = 1, validation = 2, numerical = 3, io = 4 };

// Runs the tailtopo command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tailtopo::cli
