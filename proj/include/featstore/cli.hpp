#pragma once

#include <string>
#include <vector>

namespace featstore {

// Runs one CLI invocation. Exit codes: 0 success, 1 runtime error
// (diagnostic on stderr as "error[<code>]: <message>"), 2 usage error.
int dispatch(int argc, const char* const* argv);
int dispatch(const std::vector<std::string>& args);  // without argv[0]

}  // namespace featstore
