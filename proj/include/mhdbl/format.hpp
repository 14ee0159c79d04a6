#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace mhdbl {

// Shortest decimal that round-trips to the same double (at most 17 digits).
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general);
  return std::string(buf, res.ptr);
}

}  // namespace mhdbl
