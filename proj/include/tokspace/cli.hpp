#pragma once

#include <iosfwd>

namespace tokspace {

enum ExitCode { kExitOk = 0, kExitDomain = 1, kExitUsage = 2 };

// Runs one command line. Output goes to out, diagnostics and help on usage
// errors to err.
int dispatch(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace tokspace
