#include "patchbound/greens.hpp"

#include <cmath>
#include <stdexcept>

namespace patchbound {

namespace {

// Branch with Im <= 0; ties (real result) keep Re >= 0.
cplx sqrt_lower(cplx w) {
  cplx r = std::sqrt(w);
  if (r.imag() > 0.0) r = -r;
  return r;
}

// tan(z) through exp(-2jz), stable for Im z <= 0.
cplx tan_lower(cplx z) {
  const cplx u = std::exp(-2.0 * j1i * z);
  return -j1i * (1.0 - u) / (1.0 + u);
}

// z * cot(z h) with the removable z -> 0 limit 1/h.
cplx z_cot_zh(cplx z, double h) {
  const cplx zh = z * h;
  if (std::abs(zh) < 1e-5) {
    return (1.0 - zh * zh / 3.0) / h;
  }
  return z / tan_lower(zh);
}

}  // namespace

SubstrateStack::SubstrateStack(cplx eps_r_, double h_) : eps_r(eps_r_), h(h_) {
  if (!(eps_r.real() >= 1.0)) {
    throw std::invalid_argument("[ERROR] SubstrateStack: Re(eps_r) must be >= 1.");
  }
  if (eps_r.imag() > 0.0) {
    throw std::invalid_argument(
        "[ERROR] SubstrateStack: Im(eps_r) must be <= 0 for a passive dielectric (exp(+j w t)).");
  }
  if (!(h > 0.0)) {
    throw std::invalid_argument("[ERROR] SubstrateStack: slab thickness h must be positive.");
  }
}

bool SubstrateStack::single_tm_mode(double lambda0) const {
  const double er = eps_r.real();
  if (er <= 1.0) return true;
  return h < lambda0 / (4.0 * std::sqrt(er - 1.0));
}

WaveContext WaveContext::from_frequency(double f) {
  if (!(f > 0.0)) {
    throw std::invalid_argument("[ERROR] WaveContext::from_frequency(): f must be positive.");
  }
  WaveContext ctx;
  ctx.f = f;
  ctx.omega = 2.0 * pi * f;
  ctx.k0 = ctx.omega / c0;
  ctx.lambda0 = c0 / f;
  return ctx;
}

double WaveContext::lambda_eps(const SubstrateStack& stack) const {
  return lambda0 / std::sqrt(stack.eps_r.real());
}

cplx kz_air(cplx k_rho, const WaveContext& ctx) {
  return sqrt_lower(ctx.k0 * ctx.k0 - k_rho * k_rho);
}

cplx kz_diel(cplx k_rho, const SubstrateStack& stack, const WaveContext& ctx) {
  return sqrt_lower(stack.eps_r * (ctx.k0 * ctx.k0) - k_rho * k_rho);
}

cplx tm_impedance(cplx k_rho, const SubstrateStack& stack, const WaveContext& ctx) {
  const cplx kz0 = kz_air(k_rho, ctx);
  const cplx kz1 = kz_diel(k_rho, stack, ctx);
  const cplx z_up = kz0 / (ctx.omega * eps0);
  const cplx z_dn = j1i * kz1 * tan_lower(kz1 * stack.h) / (ctx.omega * eps0 * stack.eps_r);
  return z_up * z_dn / (z_up + z_dn);
}

cplx te_impedance(cplx k_rho, const SubstrateStack& stack, const WaveContext& ctx) {
  // Admittance form: finite at kz0 -> 0 where the up impedance diverges.
  const cplx kz0 = kz_air(k_rho, ctx);
  const cplx kz1 = kz_diel(k_rho, stack, ctx);
  const cplx y_up = kz0 / (ctx.omega * mu0);
  const cplx y_dn = -j1i * z_cot_zh(kz1, stack.h) / (ctx.omega * mu0);
  return 1.0 / (y_up + y_dn);
}

cplx tm_impedance_tail(cplx k_rho, const SubstrateStack& stack, const WaveContext& ctx) {
  return -j1i * k_rho / (ctx.omega * eps0 * (stack.eps_r + 1.0));
}

cplx te_impedance_tail(cplx k_rho, const WaveContext& ctx) {
  return j1i * ctx.omega * mu0 / (2.0 * k_rho);
}

Eigen::Matrix2cd spectral_dyad(double kx, double ky, const SubstrateStack& stack,
                               const WaveContext& ctx) {
  const double k_rho = std::hypot(kx, ky);
  double cx = 1.0, sy = 0.0;
  if (k_rho > 0.0) {
    cx = kx / k_rho;
    sy = ky / k_rho;
  }
  const cplx ztm = tm_impedance(k_rho, stack, ctx);
  const cplx zte = te_impedance(k_rho, stack, ctx);
  Eigen::Matrix2cd g;
  g(0, 0) = ztm * cx * cx + zte * sy * sy;
  g(1, 1) = ztm * sy * sy + zte * cx * cx;
  g(0, 1) = (ztm - zte) * cx * sy;
  g(1, 0) = g(0, 1);
  return g;
}

FarField hed_farfield(double theta, double phi, Orientation orient, cplx moment,
                      const SubstrateStack& stack, const WaveContext& ctx) {
  if (!(theta >= 0.0) || theta >= 0.5 * pi) {
    throw std::domain_error("[ERROR] hed_farfield(): theta must lie in [0, pi/2).");
  }
  if (orient == Orientation::y) phi -= 0.5 * pi;

  const double k = ctx.k0;
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const cplx n_t = std::sqrt(stack.eps_r - st * st);  // Re > 0 branch for Re(eps_r) >= 1
  const cplx khn = k * stack.h * n_t;
  const cplx cot = 1.0 / tan_lower(khn);
  const cplx scale = z0 / (2.0 * pi) * moment * j1i * k;

  FarField ff;
  ff.f_theta = scale * (-n_t * std::cos(phi) * ct) / (n_t - j1i * stack.eps_r * ct * cot);
  ff.f_phi = scale * (std::sin(phi) * ct) / (ct - j1i * n_t * cot);
  return ff;
}

namespace {

// TM: Z_up + Z_dn; TE: Y_up + Y_dn. Either vanishes exactly at a proper pole.
cplx pole_dispersion(cplx k_rho, bool te, const SubstrateStack& stack, const WaveContext& ctx) {
  const cplx kz0 = kz_air(k_rho, ctx);
  const cplx kz1 = kz_diel(k_rho, stack, ctx);
  if (te) {
    return (kz0 - j1i * z_cot_zh(kz1, stack.h)) / (ctx.omega * mu0);
  }
  return (kz0 + j1i * kz1 * tan_lower(kz1 * stack.h) / stack.eps_r) / (ctx.omega * eps0);
}

// Exact d/dk_rho of pole_dispersion (finite differences lose ~8 digits when
// the pole hugs the air branch point, which would spoil residue-based power
// accounting). Uses dkz/dk_rho = -k_rho/kz for both layers.
cplx dispersion_derivative(cplx kp, bool te, const SubstrateStack& stack, const WaveContext& ctx) {
  const cplx kz0 = kz_air(kp, ctx);
  const cplx kz1 = kz_diel(kp, stack, ctx);
  const double h = stack.h;
  if (te) {
    const cplx cot = 1.0 / tan_lower(kz1 * h);
    const cplx d_kz1_cot = cot - kz1 * h * (1.0 + cot * cot);  // d[kz1 cot(kz1 h)]/dkz1
    return (-kp / kz0 + j1i * (kp / kz1) * d_kz1_cot) / (ctx.omega * mu0);
  }
  const cplx tn = tan_lower(kz1 * h);
  const cplx d_kz1_tan = tn + kz1 * h * (1.0 + tn * tn);  // d[kz1 tan(kz1 h)]/dkz1
  return (-kp / kz0 - j1i * (kp / kz1) * d_kz1_tan / stack.eps_r) / (ctx.omega * eps0);
}

}  // namespace

std::vector<SurfaceWavePole> find_surface_wave_poles(const SubstrateStack& stack,
                                                     const WaveContext& ctx) {
  std::vector<SurfaceWavePole> poles;
  const double er = stack.eps_r.real();
  if (er <= 1.0) return poles;

  const SubstrateStack real_stack(cplx(er, 0.0), stack.h);
  const double k = ctx.k0;
  const double lo = k * (1.0 + 1e-9);
  const double hi = k * std::sqrt(er) * (1.0 - 1e-9);
  const int n_scan = 2048;

  for (bool te : {false, true}) {
    // On (k, sqrt(er) k) the lossless dispersion function is purely imaginary;
    // roots are sign changes of its imaginary part that are not tan/cot poles.
    auto f = [&](double x) { return pole_dispersion(x, te, real_stack, ctx).imag(); };
    double xp = lo, fp = f(xp);
    for (int i = 1; i <= n_scan; ++i) {
      const double xn = lo + (hi - lo) * double(i) / n_scan;
      const double fn = f(xn);
      if (std::isfinite(fp) && std::isfinite(fn) && fp * fn < 0.0) {
        double a = xp, b = xn, fa = fp;
        for (int it = 0; it < 200 && (b - a) > 1e-15 * k; ++it) {
          const double m = 0.5 * (a + b);
          const double fm = f(m);
          if (fa * fm <= 0.0) {
            b = m;
          } else {
            a = m;
            fa = fm;
          }
        }
        const double root = 0.5 * (a + b);
        // Discard pole-type sign changes of tan/cot.
        if (std::abs(pole_dispersion(root, te, real_stack, ctx)) <
            1e-4 * std::abs(pole_dispersion(lo, te, real_stack, ctx)) + 1e-12) {
          cplx kp = root;
          if (!stack.lossless()) {
            for (int it = 0; it < 50; ++it) {
              const cplx d = pole_dispersion(kp, te, stack, ctx);
              const cplx dd = dispersion_derivative(kp, te, stack, ctx);
              const cplx stepc = d / dd;
              kp -= stepc;
              if (std::abs(stepc) < 1e-14 * k) break;
            }
            if (kp.imag() > 0.0) kp = cplx(kp.real(), -std::abs(kp.imag()));
          }
          SurfaceWavePole p;
          p.k_rho = kp;
          p.te = te;
          // Residue of the parallel impedance Zu Zd / (Zu + Zd) at the pole.
          if (te) {
            const cplx z_up = ctx.omega * mu0 / kz_air(kp, ctx);
            const cplx dd = dispersion_derivative(kp, true, stack, ctx);
            // D_te is the admittance sum; Z_te = 1/D_te so residue = 1/D_te'.
            p.residue = 1.0 / dd;
            (void)z_up;
          } else {
            const cplx z_up = kz_air(kp, ctx) / (ctx.omega * eps0);
            const cplx dd = dispersion_derivative(kp, false, stack, ctx);
            p.residue = -(z_up * z_up) / dd;
          }
          poles.push_back(p);
        }
      }
      xp = xn;
      fp = fn;
    }
  }
  return poles;
}

}  // namespace patchbound
