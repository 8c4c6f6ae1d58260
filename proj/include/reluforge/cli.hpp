#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace reluforge::cli {

/// Exit codes: 0 success, 1 invalid input, 2 runtime failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace reluforge::cli
