#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

#include "covrnn/error.hpp"

namespace covrnn {

// Shortest decimal text that parses back to the same double.
inline std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_optional(const std::optional<double>& v) { return v ? fmt_double(*v) : "NA"; }

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("bad number '" + std::string(s) + "'");
  }
  return v;
}

inline std::optional<double> parse_optional(std::string_view s) {
  if (s == "NA") return std::nullopt;
  return parse_double(s);
}

inline unsigned long long parse_count(std::string_view s) {
  unsigned long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("bad count '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace covrnn
