#pragma once

#include <string>
#include <vector>

namespace liftcut::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kNonConvergence = 2, kUsage = 3 };

/// Entry point of the liftcut tool. args excludes the program name.
/// Arguments without the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace liftcut::cli
