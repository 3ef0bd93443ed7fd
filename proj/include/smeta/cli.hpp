#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace smeta {

/// Entry point of the `smeta` command-line tool. Returns the process exit code.
int run_cli(int argc, const char* const* argv);

/// Convenience overload for tests: args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads `key = value` lines ('#' starts a comment) and returns them as
/// `--key=value` tokens for every key not already given in `args`.
std::vector<std::string> config_file_arguments(const std::string& path,
                                               const std::vector<std::string>& args);

}  // namespace smeta
