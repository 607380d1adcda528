#pragma once

#include <string>
#include <vector>

namespace parkipipe {

/// Entry point behind the parkipipe binary. Returns 0 on success, 1 on
/// domain errors (message on stderr plus error.json in the output directory
/// when resolvable), 2 on usage errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace parkipipe
