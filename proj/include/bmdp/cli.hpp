#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bmdp {

/// Command-line driver behind the bmdp binary. args excludes the program
/// name. Subcommands: solve, ivi, expand, reduce, sweep, check. Writes
/// results to out and diagnostics to err; returns the process exit code:
/// 0 success, 1 semantic or runtime error, 2 syntax or usage error.
/// Output is byte-identical across runs for identical inputs and flags.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bmdp
