#ifndef SV_FORMAT_HPP
#define SV_FORMAT_HPP

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace sv {

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("NaN");
}

/// Rounded to `digits` significant digits (summary output).
inline std::string format_significant(double x, int digits = 4) {
  if (!std::isfinite(x)) return format_double(x);
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, digits);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("NaN");
}

inline double round_significant(double x, int digits = 4) {
  if (!std::isfinite(x) || x == 0.0) return x;
  return std::stod(format_significant(x, digits));
}

}  // namespace sv

#endif  // SV_FORMAT_HPP
