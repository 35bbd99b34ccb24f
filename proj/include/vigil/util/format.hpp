#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace vigil {

// Fixed formatting so emitted tables and reports are byte-stable.
inline std::string fmt_double(double v, int digits = 6) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

inline std::string fmt_fixed(double v, int decimals = 4) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  // Avoid the "-0.0000" artifact.
  std::string s = buf;
  bool all_zero = true;
  for (char c : s)
    if (c >= '1' && c <= '9') all_zero = false;
  if (all_zero && !s.empty() && s[0] == '-') s.erase(0, 1);
  return s;
}

}  // namespace vigil
