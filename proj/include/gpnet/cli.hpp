#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gpnet::cli {

// Runs one invocation; args exclude the program name. Returns the exit code:
// 0 ok, 1 usage, 2 data/io, 3 numeric, 4 resource.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gpnet::cli
