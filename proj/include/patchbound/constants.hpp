// Physical constants and shared scalar types.
#pragma once

#include <complex>

namespace patchbound {

using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

// CODATA 2018 exact-to-listed-digits values; everything else derives from these.
inline constexpr double eps0 = 8.8541878128e-12;  // F/m
inline constexpr double mu0 = 1.25663706212e-6;   // H/m

inline const double z0 = std::sqrt(mu0 / eps0);        // free-space wave impedance, Ohm
inline const double c0 = 1.0 / std::sqrt(mu0 * eps0);  // free-space speed of light, m/s

inline constexpr cplx j1i{0.0, 1.0};

}  // namespace patchbound
