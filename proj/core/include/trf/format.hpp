#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace trf {

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

inline std::string format_fixed(double v, int digits) {
  char buf[128];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

}  // namespace trf
