#ifndef NESTCAST_CLI_HPP
#define NESTCAST_CLI_HPP

#include <iosfwd>

namespace nestcast::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUserError = 2,
    kDegenerate = 3,
};

/// Entry point of the `nestcast` tool with subcommands test, simulate, power
/// and vcalc.  Results go to `out`; diagnostics and progress go to `err`.
/// Every failure prints exactly one line starting with "error: <kind>: ".
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nestcast::cli

#endif  // NESTCAST_CLI_HPP
