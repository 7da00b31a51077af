#pragma once

// Command-line front end. One binary, subcommands synth, render, perceive,
// score, reward, optimize, probe, report.
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error,
// 3 internal error. Diagnostics go to `err`; data goes to files or `out`.

#include <ostream>
#include <string>
#include <vector>

namespace geofb::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInternal = 3 };

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace geofb::cli
