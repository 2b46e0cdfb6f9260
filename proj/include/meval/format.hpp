#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace meval {

// Fixed 6-significant-digit rendering for all computed numeric output, so
// reruns diff cleanly.
inline std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // normalize -0
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

// Shortest round-trip representation; parsing the text recovers the exact
// double. Used by the dataset writer so load -> write -> load is identity.
inline std::string format_exact(double v) {
  if (v == 0.0) v = 0.0;
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Value rounded to the 6-digit output precision; store this in JSON trees so
// serialized numbers match format_number.
inline double rounded_number(double v) {
  return std::stod(format_number(v));
}

}  // namespace meval
