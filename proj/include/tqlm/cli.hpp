#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tqlm::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Exit codes: 0 success, 1 selftest failure, 2 parse/usage error,
/// 3 numerical error (domain, range, missing mgf, infeasible budget, ...).
enum ExitCode : int { ok = 0, selftest_failed = 1, usage = 2, numerical = 3 };

/// Runs one command line (without the program name). Results go to `out`, or
/// atomically to --out; diagnostics go to `err`. Nothing is written on failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tqlm::cli
