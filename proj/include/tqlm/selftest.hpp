#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tqlm {

struct PropertyResult {
  std::string name;
  bool passed;
  std::string detail;
};

/// Runs a compact version of the invariant suite (a few seconds at most).
/// Random fixtures are derived from `seed`, so the output is reproducible.
std::vector<PropertyResult> run_selftest(std::uint64_t seed);

}  // namespace tqlm
