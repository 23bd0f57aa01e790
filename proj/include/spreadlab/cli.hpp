#pragma once

#include <iosfwd>

namespace spreadlab::cli {

/// Runs one subcommand (synth, fit, predict, interpret, evaluate) and returns
/// the process exit status: 0 ok, 2 usage/config, 3 I/O, 4 numeric failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spreadlab::cli
