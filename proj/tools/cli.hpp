#pragma once

#include <ostream>

namespace slp::cli {

/// Parses and runs one command. Returns the process exit code: 0 success,
/// 1 runtime error, 2 usage or configuration error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace slp::cli
