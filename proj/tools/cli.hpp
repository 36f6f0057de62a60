#pragma once

#include <string>
#include <vector>

namespace wicked {

// Subcommands: transform | label-sba | eval | report. Returns the process
// exit status: 0 success, 1 runtime failure, 2 usage error.
int run_cli(const std::vector<std::string>& args);

} // namespace wicked
