#pragma once

#include <array>
#include <cstddef>

namespace patchbound {

// Closed-form machinery for the quasi-static part of the spatial-domain
// reaction integrals.  The slowly decaying large-wavenumber tail of the
// layered-media kernel corresponds, in the spatial domain, to the two
// algebraic kernels
//
//   1 / rho          (charge-charge interaction)
//   r r^T / rho^3    (current-current interaction),   rho = |r - r'|,
//
// and the double surface integrals of rooftop pairs against these kernels
// reduce to 2-D integrals of separable piecewise polynomials.  This header
// provides the exact antiderivatives, signed-rectangle integrals, rooftop
// correlation profiles, and the assembled correlation integral.

// Antiderivative A(u, v) = int_0^u int_0^v s^a t^b / (s^2+t^2)^(1/2) dt ds,
// valid for all real u, v (odd/even extension across the axes), a, b in 0..1.
double static_kernel_antiderivative(int a, int b, double u, double v);

// Same with kernel s^a t^b / (s^2+t^2)^(3/2); supported index range is
// a in 2..5 with b in 0..3, plus a = 1 with b in 1..3.
double dynamic_kernel_antiderivative(int a, int b, double u, double v);

// Integrals over the rectangle [u1,u2] x [v1,v2] by corner summation.
double rect_integral_rho1(int a, int b, double u1, double u2, double v1, double v2);
double rect_integral_rho3(int a, int b, double u1, double u2, double v1, double v2);

// One-dimensional factor profiles of a rooftop function on cell pitch d:
//   kCurrentAlong  - unit-peak triangle, half-width d (current, along axis)
//   kCurrentAcross - unit box of width d              (current, across axis)
//   kDivAlong      - triangle derivative, +-1/d       (divergence, along axis)
enum class FactorProfile { kCurrentAlong, kCurrentAcross, kDivAlong };

// Cross-correlation c(w) = int f(x) g(x - w) dx of two factor profiles, as a
// piecewise cubic in the separation w.  Pieces live on [knots[i], knots[i+1]]
// scaled by d; the polynomial value is amp * sum_k coeff[i][k] * (w/d)^k.
struct CorrelationPoly {
  static constexpr std::size_t kMaxPieces = 4;
  std::array<double, kMaxPieces + 1> knots{};             // unit breakpoints
  std::array<std::array<double, 4>, kMaxPieces> coeff{};  // ascending powers
  std::size_t pieces = 0;
  double d = 1.0;    // physical cell pitch
  double amp = 1.0;  // physical amplitude factor
};

CorrelationPoly profile_correlation(FactorProfile f, FactorProfile g, double d);

// Evaluate a correlation polynomial at physical separation w (0 outside).
double evaluate_correlation(const CorrelationPoly& poly, double w);

// Planar kernels appearing in the reduced 2-D integrals.
enum class PlanarKernel { kInvRho, kUURho3, kVVRho3, kUVRho3 };

// I = int int cx(u - delta_cx) * cy(v - delta_cy) * K(u, v) du dv with K one
// of 1/rho, u^2/rho^3, v^2/rho^3, u*v/rho^3.  Exact (closed form).
double correlation_integral(const CorrelationPoly& cx, const CorrelationPoly& cy,
                            PlanarKernel kernel, double delta_cx, double delta_cy);

}  // namespace patchbound
