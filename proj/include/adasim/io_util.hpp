#pragma once

#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace adasim {

// Hex-float text encoding: exact round trip for doubles and floats, still a
// plain structured text file.
inline std::string hex_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

inline std::string hex_float(float v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", static_cast<double>(v));
  return buf;
}

inline double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw std::runtime_error("bad numeric token: " + s);
  return v;
}

inline float parse_float(const std::string& s) { return static_cast<float>(parse_double(s)); }

}  // namespace adasim
