#pragma once

// Internal number formatting shared by the CSV writers.

#include <cstdio>
#include <string>

namespace pgff::detail {

/// %.17g: enough digits for a lossless double round trip.
inline std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Short human-readable form for tables.
inline std::string fmt_short(double x, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

}  // namespace pgff::detail
