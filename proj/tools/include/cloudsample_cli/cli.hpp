#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cloudsample::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Runs one invocation. `args` excludes the program name. Returns the exit
/// code: 0 on success, 1 on usage or validation errors, 2 on IO errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cloudsample::cli
