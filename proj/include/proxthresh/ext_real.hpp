#pragma once

#include <charconv>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace proxthresh {

/// Extended real value. Function values live in R ∪ {+inf}; envelope values
/// may additionally be -inf. IEEE infinities carry both, and +inf is
/// absorbing under addition with any finite real.
using ExtReal = double;

/// A point of R^n.
using Point = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_finite(ExtReal v) { return std::isfinite(v); }

/// Shortest round-trip decimal form; infinities as "inf" / "-inf".
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
  return std::string(buf, end);
}

/// Inverse of format_double. Throws std::invalid_argument on malformed input.
inline double parse_double(std::string_view s) {
  if (s == "inf" || s == "+inf") return kInf;
  if (s == "-inf") return -kInf;
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace proxthresh
