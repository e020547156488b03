#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "tqlm/errors.hpp"

namespace tqlm::detail {

struct CallSpec {
  std::string name;
  std::vector<double> args;
  bool has_parens = false;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double parse_decimal(std::string_view text, std::string_view context) {
  text = trim(text);
  double value = 0.0;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), last, value);
  if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    throw InputError("malformed number '" + std::string(text) + "' in '" + std::string(context) + "'");
  }
  return value;
}

/// Parses `name` or `name(a, b, ...)` with '.' decimals.
inline CallSpec parse_call(std::string_view spec) {
  const std::string_view whole = spec;
  spec = trim(spec);
  CallSpec out;
  const auto open = spec.find('(');
  if (open == std::string_view::npos) {
    out.name = std::string(spec);
    return out;
  }
  if (spec.back() != ')') throw InputError("missing ')' in '" + std::string(whole) + "'");
  out.name = std::string(trim(spec.substr(0, open)));
  out.has_parens = true;
  auto body = spec.substr(open + 1, spec.size() - open - 2);
  if (trim(body).empty()) return out;
  while (true) {
    const auto comma = body.find(',');
    out.args.push_back(parse_decimal(body.substr(0, comma), whole));
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace tqlm::detail
