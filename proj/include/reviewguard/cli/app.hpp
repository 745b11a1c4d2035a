#pragma once

#include <ostream>

namespace reviewguard::cli {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;  // a reviewguard::Error reached the top level
inline constexpr int kExitUsage = 2;   // bad flags, unknown subcommand, missing backend

int dispatch(int argc, char** argv, std::ostream& out, std::ostream& err);

// Makes a running `serve` return from dispatch. Also wired to SIGINT/SIGTERM.
void request_serve_stop();

}  // namespace reviewguard::cli
