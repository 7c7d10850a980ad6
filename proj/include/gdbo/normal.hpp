#pragma once

#include <cmath>
#include <numbers>

namespace gdbo::normal {

inline double pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// upper tail, accurate for large z
inline double sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

}  // namespace gdbo::normal
