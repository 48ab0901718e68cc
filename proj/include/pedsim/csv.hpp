#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace pedsim {

// Fixed-width-free, locale-independent float formatting. %.10g keeps CSV
// output byte-stable across runs while staying human readable.
inline std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

}  // namespace pedsim
