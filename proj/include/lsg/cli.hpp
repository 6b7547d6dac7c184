#pragma once

namespace lsg {

// Full command-line entry point; returns the process exit code
// (0 success, 1 internal error, 2 user/config error).
int run_cli(int argc, char** argv);

}  // namespace lsg
