#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace scr::cli {

/// Runs one subcommand. Returns 0 on success, 1 on runtime failure and 2 on
/// bad flags or configuration.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace scr::cli
