#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace tqlm {

/// Shortest decimal that round-trips, e.g. 0.5 -> "0.5".
inline std::string format_shortest(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

/// Fixed 17 significant digits ("%.17g"); the stable form used in machine output.
inline std::string format_g17(double x) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace tqlm
