#pragma once

#include <iosfwd>

namespace transcp {

// Entry point of the transcp executable. Returns the process exit code:
// 0 success, 1 computation error, 2 usage error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace transcp
