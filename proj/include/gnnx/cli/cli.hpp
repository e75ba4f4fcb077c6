#pragma once

#include <exception>
#include <iosfwd>

namespace gnnx {

// Environment variable naming the base directory for relative paths.
inline constexpr const char* kOutputRootEnv = "GNNX_OUTPUT_ROOT";

// Exit codes: 0 success, 2 usage or validation, 3 integrity, 4 numerical
// failure, 1 anything else.
int exit_code_for(const std::exception& error);

// Parses and runs one subcommand; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gnnx
