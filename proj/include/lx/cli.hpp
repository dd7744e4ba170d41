#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lx {

// Exit codes of the `lx` command.
enum ExitCode : int {
    kExitOk = 0,
    kExitCompile = 1,
    kExitRuntime = 2,
    kExitWitness = 3,
    kExitEnvironment = 4,
};

// Runs `lx` with `args` (without the program name), writing reports to `out`
// and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lx
