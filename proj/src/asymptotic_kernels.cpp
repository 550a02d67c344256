#include "patchbound/asymptotic_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace patchbound {

namespace {

// All antiderivatives are evaluated in extended precision: the corner sums
// downstream subtract nearly equal values, and several closed forms pair a
// large asinh term against a matching algebraic one.
using real = long double;

// Antiderivative on the positive quadrant, kernel s^a t^b / rho, a,b in 0..1.
// Uses R = hypot(u,v), Du = R - u and Dv = R - v in cancellation-free form.
real anti_rho1_pos(int a, int b, real u, real v) {
  const real R = std::hypot(u, v);
  const real Du = v * v / (R + u);
  const real Dv = u * u / (R + v);
  switch (a * 2 + b) {
    case 0:  // 1/rho
      return u * std::asinh(v / u) + v * std::asinh(u / v);
    case 1:  // t/rho
      return u * Du / 2 + v * v * std::asinh(u / v) / 2;
    case 2:  // s/rho
      return u * u * std::asinh(v / u) / 2 + v * Dv / 2;
    case 3:  // s*t/rho
      return (u * u * Du + v * v * Dv) / 3;
  }
  throw std::invalid_argument("static kernel antiderivative: index out of range");
}

// Antiderivative on the positive quadrant, kernel s^a t^b / rho^3,
// a in 2..5 with b in 0..3, or a = 1 with b in 1..3.
real anti_rho3_pos(int a, int b, real u, real v) {
  if (a == 3 && b == 3 && v > u) std::swap(u, v);  // symmetric kernel
  const real R = std::hypot(u, v);
  const real Du = v * v / (R + u);
  const real Dv = u * u / (R + v);
  switch (a * 4 + b) {
    case 1 * 4 + 1:
      return (u >= v) ? v - Du : u - Dv;  // both equal u + v - R
    case 1 * 4 + 2:
      return u * u * std::asinh(v / u) / 2 - v * Dv / 2;
    case 1 * 4 + 3:
      return 2 * u * u * Du / 3 - v * v * Dv / 3;
    case 2 * 4 + 0:
      return v * std::asinh(u / v);
    case 2 * 4 + 1:
      return -u * Du / 2 + v * v * std::asinh(u / v) / 2;
    case 2 * 4 + 2:
      return u * u * u * std::asinh(v / u) / 3 - u * v * R / 3 +
             v * v * v * std::asinh(u / v) / 3;
    case 2 * 4 + 3:
      return -u * v * v * (u * Du + v * v) / (4 * (R + u)) +
             v * v * v * v * std::asinh(u / v) / 4;
    case 3 * 4 + 0:
      return v * Dv;
    case 3 * 4 + 1:
      return (-u * u * Du + 2 * v * v * Dv) / 3;
    case 3 * 4 + 2:
      return u * u * u * u * std::asinh(v / u) / 4 -
             u * u * v * (v * Dv + u * u) / (4 * (R + v));
    case 3 * 4 + 3:
      return -u * u * v * v * (u * Du + v * v) / (5 * (R + u)) +
             2 * v * v * v * v * Dv / 5;
    case 4 * 4 + 0:
      return u * v * R / 2 - v * v * v * std::asinh(u / v) / 2;
    case 4 * 4 + 1:
      return -u * u * u * Du / 4 + 3 * u * v * v * R / 8 -
             3 * v * v * v * v * std::asinh(u / v) / 8;
    case 4 * 4 + 2:
      return std::pow(u, real(5)) * std::asinh(v / u) / 5 - u * u * u * v * R / 5 +
             3 * u * v * v * v * R / 10 -
             3 * std::pow(v, real(5)) * std::asinh(u / v) / 10;
    case 4 * 4 + 3:
      return -u * u * u * v * v * (u * Du + v * v) / (6 * (R + u)) +
             u * v * v * v * v * R / 4 -
             std::pow(v, real(6)) * std::asinh(u / v) / 4;
    case 5 * 4 + 0:
      return u * u * v * (u * u + v * Dv) / (3 * (R + v));
    case 5 * 4 + 1:
      return -u * u * u * u * Du / 5 +
             4 * u * u * v * v * (u * u + v * Dv) / (15 * (R + v));
    case 5 * 4 + 2:
      return std::pow(u, real(6)) * std::asinh(v / u) / 6 -
             u * u * u * u * v * R / 6 +
             2 * u * u * v * v * v * (u * u + v * Dv) / (9 * (R + v));
    case 5 * 4 + 3:
      return -u * u * u * u * v * v * (u * Du + v * v) / (7 * (R + u)) +
             4 * u * u * v * v * v * v * (u * u + v * Dv) / (21 * (R + v));
  }
  throw std::invalid_argument("dynamic kernel antiderivative: index out of range");
}

// Extend a positive-quadrant antiderivative to all (u, v): the integrand is
// even/odd in s and t according to the exponent parities, and A vanishes
// whenever either limit is zero.
template <typename F>
real anti_signed(int a, int b, real u, real v, F&& pos) {
  if (u == 0 || v == 0) return 0;
  real sign = 1;
  if (u < 0 && a % 2 == 0) sign = -sign;
  if (v < 0 && b % 2 == 0) sign = -sign;
  return sign * pos(a, b, std::abs(u), std::abs(v));
}

template <typename F>
double rect_by_corners(int a, int b, real u1, real u2, real v1, real v2, F&& pos) {
  const real s = anti_signed(a, b, u2, v2, pos) - anti_signed(a, b, u1, v2, pos) -
                 anti_signed(a, b, u2, v1, pos) + anti_signed(a, b, u1, v1, pos);
  return static_cast<double>(s);
}

struct UnitProfileTable {
  std::array<double, CorrelationPoly::kMaxPieces + 1> knots;
  std::array<std::array<double, 4>, CorrelationPoly::kMaxPieces> coeff;
  std::size_t pieces;
};

// Correlations of the unit-pitch factor profiles (ascending powers of w).
const UnitProfileTable kTriTri = {
    {-2.0, -1.0, 0.0, 1.0, 2.0},
    {{{4.0 / 3.0, 2.0, 1.0, 1.0 / 6.0},
      {2.0 / 3.0, 0.0, -1.0, -0.5},
      {2.0 / 3.0, 0.0, -1.0, 0.5},
      {4.0 / 3.0, -2.0, 1.0, -1.0 / 6.0}}},
    4};
const UnitProfileTable kBoxBox = {
    {-1.0, 0.0, 1.0, 0.0, 0.0},
    {{{1.0, 1.0, 0.0, 0.0}, {1.0, -1.0, 0.0, 0.0}, {}, {}}},
    2};
const UnitProfileTable kTriBox = {
    {-1.5, -0.5, 0.5, 1.5, 0.0},
    {{{9.0 / 8.0, 1.5, 0.5, 0.0},
      {0.75, 0.0, -1.0, 0.0},
      {9.0 / 8.0, -1.5, 0.5, 0.0},
      {}}},
    3};
const UnitProfileTable kDblDbl = {
    {-2.0, -1.0, 0.0, 1.0, 2.0},
    {{{-2.0, -1.0, 0.0, 0.0},
      {2.0, 3.0, 0.0, 0.0},
      {2.0, -3.0, 0.0, 0.0},
      {-2.0, 1.0, 0.0, 0.0}}},
    4};
const UnitProfileTable kDblBox = {
    {-1.5, -0.5, 0.5, 1.5, 0.0},
    {{{1.5, 1.0, 0.0, 0.0}, {0.0, -2.0, 0.0, 0.0}, {-1.5, 1.0, 0.0, 0.0}, {}}},
    3};

CorrelationPoly from_table(const UnitProfileTable& t, double d, double amp) {
  CorrelationPoly p;
  p.knots = t.knots;
  p.coeff = t.coeff;
  p.pieces = t.pieces;
  p.d = d;
  p.amp = amp;
  return p;
}

// corr(g, f)(w) = corr(f, g)(-w): reverse the pieces and flip odd powers.
CorrelationPoly mirrored(const CorrelationPoly& p) {
  CorrelationPoly m = p;
  for (std::size_t i = 0; i < p.pieces; ++i) {
    const std::size_t r = p.pieces - 1 - i;
    m.knots[i] = -p.knots[r + 1];
    for (int k = 0; k < 4; ++k)
      m.coeff[i][k] = (k % 2 == 0) ? p.coeff[r][k] : -p.coeff[r][k];
  }
  m.knots[p.pieces] = -p.knots[0];
  return m;
}

// Global-coordinate coefficients of piece `ip` of `poly` shifted by `delta`:
// amp * sum_k c_k ((u - delta)/d)^k  =  sum_p g_p u^p.
std::array<real, 4> shifted_coeffs(const CorrelationPoly& poly, std::size_t ip,
                                   double delta) {
  static const int kBinom[4][4] = {
      {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  std::array<real, 4> g{};
  const real d = poly.d;
  real inv_dk = 1;  // 1/d^k
  real neg_delta_pow[4] = {1, -delta, delta * (real)delta,
                           -delta * (real)delta * delta};
  for (int k = 0; k < 4; ++k) {
    const real ck = poly.coeff[ip][k];
    if (ck != 0) {
      for (int p = 0; p <= k; ++p)
        g[p] += poly.amp * ck * kBinom[k][p] * neg_delta_pow[k - p] * inv_dk;
    }
    inv_dk /= d;
  }
  return g;
}

}  // namespace

double static_kernel_antiderivative(int a, int b, double u, double v) {
  if (a < 0 || a > 1 || b < 0 || b > 1)
    throw std::invalid_argument("static kernel antiderivative: index out of range");
  return static_cast<double>(anti_signed(a, b, u, v, anti_rho1_pos));
}

double dynamic_kernel_antiderivative(int a, int b, double u, double v) {
  const bool ok = (a >= 2 && a <= 5 && b >= 0 && b <= 3) || (a == 1 && b >= 1 && b <= 3);
  if (!ok)
    throw std::invalid_argument("dynamic kernel antiderivative: index out of range");
  return static_cast<double>(anti_signed(a, b, u, v, anti_rho3_pos));
}

double rect_integral_rho1(int a, int b, double u1, double u2, double v1, double v2) {
  if (a < 0 || a > 1 || b < 0 || b > 1)
    throw std::invalid_argument("rect_integral_rho1: index out of range");
  return rect_by_corners(a, b, u1, u2, v1, v2, anti_rho1_pos);
}

double rect_integral_rho3(int a, int b, double u1, double u2, double v1, double v2) {
  const bool ok = (a >= 2 && a <= 5 && b >= 0 && b <= 3) || (a == 1 && b >= 1 && b <= 3);
  if (!ok) throw std::invalid_argument("rect_integral_rho3: index out of range");
  return rect_by_corners(a, b, u1, u2, v1, v2, anti_rho3_pos);
}

CorrelationPoly profile_correlation(FactorProfile f, FactorProfile g, double d) {
  if (!(d > 0)) throw std::invalid_argument("profile_correlation: pitch must be positive");
  using FP = FactorProfile;
  if (f == FP::kCurrentAlong && g == FP::kCurrentAlong)
    return from_table(kTriTri, d, d);
  if (f == FP::kCurrentAcross && g == FP::kCurrentAcross)
    return from_table(kBoxBox, d, d);
  if (f == FP::kCurrentAlong && g == FP::kCurrentAcross)
    return from_table(kTriBox, d, d);
  if (f == FP::kCurrentAcross && g == FP::kCurrentAlong)
    return mirrored(from_table(kTriBox, d, d));
  if (f == FP::kDivAlong && g == FP::kDivAlong)
    return from_table(kDblDbl, d, 1.0 / d);
  if (f == FP::kDivAlong && g == FP::kCurrentAcross)
    return from_table(kDblBox, d, 1.0);
  if (f == FP::kCurrentAcross && g == FP::kDivAlong)
    return mirrored(from_table(kDblBox, d, 1.0));
  throw std::invalid_argument("profile_correlation: unsupported profile pair");
}

double evaluate_correlation(const CorrelationPoly& poly, double w) {
  const double x = w / poly.d;
  for (std::size_t i = 0; i < poly.pieces; ++i) {
    if (x >= poly.knots[i] && x <= poly.knots[i + 1]) {
      double acc = 0;
      for (int k = 3; k >= 0; --k) acc = acc * x + poly.coeff[i][k];
      return poly.amp * acc;
    }
  }
  return 0.0;
}

double correlation_integral(const CorrelationPoly& cx, const CorrelationPoly& cy,
                            PlanarKernel kernel, double delta_cx, double delta_cy) {
  real total = 0;
  for (std::size_t ip = 0; ip < cx.pieces; ++ip) {
    const double u1 = delta_cx + cx.d * cx.knots[ip];
    const double u2 = delta_cx + cx.d * cx.knots[ip + 1];
    const auto gx = shifted_coeffs(cx, ip, delta_cx);
    for (std::size_t jp = 0; jp < cy.pieces; ++jp) {
      const double v1 = delta_cy + cy.d * cy.knots[jp];
      const double v2 = delta_cy + cy.d * cy.knots[jp + 1];
      const auto gy = shifted_coeffs(cy, jp, delta_cy);
      for (int p = 0; p < 4; ++p) {
        if (gx[p] == 0) continue;
        for (int q = 0; q < 4; ++q) {
          if (gy[q] == 0) continue;
          double r;
          switch (kernel) {
            case PlanarKernel::kInvRho:
              r = rect_integral_rho1(p, q, u1, u2, v1, v2);
              break;
            case PlanarKernel::kUURho3:
              r = rect_integral_rho3(p + 2, q, u1, u2, v1, v2);
              break;
            case PlanarKernel::kVVRho3:
              r = rect_integral_rho3(q + 2, p, v1, v2, u1, u2);
              break;
            case PlanarKernel::kUVRho3:
              r = rect_integral_rho3(p + 1, q + 1, u1, u2, v1, v2);
              break;
            default:
              throw std::invalid_argument("correlation_integral: bad kernel");
          }
          total += gx[p] * gy[q] * r;
        }
      }
    }
  }
  return static_cast<double>(total);
}

}  // namespace patchbound
