#pragma once

#include <string>
#include <vector>

namespace rfdfin {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,       // bad arguments or I/O failure
  kExitStrict = 2,      // extraction failures under --strict
  kExitDivergence = 3,  // training produced a non-finite loss
  kExitCorrupt = 4,     // checkpoint or cache failed validation
};

// args excludes the program name.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace rfdfin
