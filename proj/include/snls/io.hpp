#pragma once

#include <charconv>
#include <cstring>
#include <string>

namespace snls {

// Shortest round-trip decimal form of a double (std::to_chars), used for all
// CSV output so that replayed runs reproduce files byte-exactly.
inline std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace snls
