#pragma once

#include <string>
#include <vector>

namespace ncbf::cli {

// Full command-line front end; takes the arguments after the program name and
// returns the process exit code (0 ok, 2 config error, 3 solver failure
// during simulation, 4 feasibility violation, 5 standalone QP failure).
int run_app(const std::vector<std::string>& args);

}  // namespace ncbf::cli
