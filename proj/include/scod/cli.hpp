#pragma once

#include <string>
#include <vector>

namespace scod {

// Batch entry points: synth, train, eval, detect, profile. Returns the
// process exit code (0 success, 1 runtime failure, 2 usage error).
int run_command(const std::vector<std::string>& args);

} // namespace scod
