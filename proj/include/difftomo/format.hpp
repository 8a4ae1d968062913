#pragma once

#include <cstdio>
#include <string>

namespace difftomo {

// Locale-independent %g formatting. Reports use 5 significant digits;
// measurement CSVs use 9 so millisecond delays survive offsets near 1e6.
inline std::string fmt_g(double v, int digits = 5) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace difftomo
