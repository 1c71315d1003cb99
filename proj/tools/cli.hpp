#pragma once

#include <iosfwd>

namespace fuzzreg {

// Exit codes: 0 success, 1 failure or non-convergence, 2 usage error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fuzzreg
