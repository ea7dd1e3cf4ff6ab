#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace comfort {

// Runs one CLI invocation; `args` excludes the program name. Returns the
// process exit code (0 success, 1 usage/validation, 2 I/O, 3 divergence).
// Streams are injectable so tests can drive commands in process.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

// The full-default run configuration written by `comfort config init`.
std::string default_config_json();

}  // namespace comfort
