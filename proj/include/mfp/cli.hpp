#pragma once

#include <string>
#include <vector>

namespace mfp {

// Front door for the pipeline: forge, construct, verify, bench, sweep,
// serve. Returns the process exit code (verify: 0 decision True, 1 decision
// False, 2 error; other subcommands: 0 success, 2 error).
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace mfp
