#pragma once

#include <string>
#include <vector>

namespace evjrs::cli {

// Parses and runs one subcommand. Returns the process exit code: 0 on
// success, otherwise the failing error category (usage 2, io 3, validation 4,
// solve 5, config 6, internal 7). `args` excludes the program name.
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, const char* const* argv);

}  // namespace evjrs::cli
