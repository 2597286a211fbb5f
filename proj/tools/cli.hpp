#pragma once

#include <string>
#include <vector>

namespace signembed::cli {

// Entry point shared by the binary and the tests. `args` excludes the
// program name. Returns 0 on success, 1 on validation errors (including
// bad flags), 2 on IO/format errors.
int run(const std::vector<std::string>& args);

}  // namespace signembed::cli
