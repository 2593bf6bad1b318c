#pragma once

#include <cmath>
#include <cstdint>

namespace sadd {

// Sine/cosine from plain IEEE arithmetic (polynomial on a reduced argument,
// Cody-Waite two-part pi/2). The synthetic data generator uses these instead
// of libm so that generated datasets carry no libm version dependence.
// Absolute error stays below 1e-13 for |x| up to a few thousand radians.

namespace detail {

inline double sin_poly(double r) {
  // Taylor series to r^13 on |r| <= pi/4.
  const double r2 = r * r;
  double p = 1.0 / 6227020800.0;          // 1/13!
  p = p * r2 - 1.0 / 39916800.0;          // 1/11!
  p = p * r2 + 1.0 / 362880.0;            // 1/9!
  p = p * r2 - 1.0 / 5040.0;              // 1/7!
  p = p * r2 + 1.0 / 120.0;               // 1/5!
  p = p * r2 - 1.0 / 6.0;                 // 1/3!
  return r + r * r2 * p;
}

inline double cos_poly(double r) {
  const double r2 = r * r;
  double p = 1.0 / 479001600.0;           // 1/12!
  p = p * r2 - 1.0 / 3628800.0;           // 1/10!
  p = p * r2 + 1.0 / 40320.0;             // 1/8!
  p = p * r2 - 1.0 / 720.0;               // 1/6!
  p = p * r2 + 1.0 / 24.0;                // 1/4!
  p = p * r2 - 1.0 / 2.0;
  return 1.0 + r2 * p;
}

}  // namespace detail

inline double det_sin(double x) {
  constexpr double kPi2Hi = 1.57079632679489655800e+00;
  constexpr double kPi2Lo = 6.12323399573676603587e-17;
  constexpr double kTwoOverPi = 6.36619772367581382433e-01;

  const double k = std::floor(x * kTwoOverPi + 0.5);
  const double r = (x - k * kPi2Hi) - k * kPi2Lo;
  const auto q = static_cast<std::int64_t>(k);
  switch (((q % 4) + 4) % 4) {
    case 0: return detail::sin_poly(r);
    case 1: return detail::cos_poly(r);
    case 2: return -detail::sin_poly(r);
    default: return -detail::cos_poly(r);
  }
}

inline double det_cos(double x) {
  constexpr double kPiHalf = 1.5707963267948966;
  return det_sin(x + kPiHalf);
}

}  // namespace sadd
