// Tests for the grounded-slab transverse network, spectral dyad, dipole far
// field and surface-wave pole finder.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "patchbound/greens.hpp"

using namespace patchbound;

namespace {

cplx lower_sqrt(cplx z) {
  cplx r = std::sqrt(z);
  if (r.imag() > 0.0) r = -r;
  return r;
}

// Independent closed form for an air-filled shorted section under an air
// half space: both sides share the same characteristic impedance.
struct AirPair {
  cplx tm, te;
};

AirPair air_parallel_closed_form(cplx k_rho, const WaveContext& ctx, double h) {
  const cplx kz = lower_sqrt(cplx(ctx.k0 * ctx.k0, 0.0) - k_rho * k_rho);
  const cplx ztm = kz / (ctx.omega * eps0);
  const cplx zte = ctx.omega * mu0 / kz;
  const cplx t = std::tan(kz * h);
  return {ztm * (j1i * t) / (1.0 + j1i * t), zte * (j1i * t) / (1.0 + j1i * t)};
}

// Image-theory far field of an x dipole at height 0 over a ground plane at
// depth h, phase referenced to the top plane (the dipole location).
FarField image_theory_x(double theta, double phi, cplx moment, double k, double h) {
  const double ct = std::cos(theta);
  const cplx common =
      (k * z0 / (2.0 * pi)) * moment * std::sin(k * h * ct) * std::exp(-j1i * cplx(k * h * ct));
  return {common * ct * std::cos(phi), -common * std::sin(phi)};
}

}  // namespace

TEST_CASE("air slab reduces to the half-space closed form") {
  const SubstrateStack air(cplx(1.0, 0.0), 4.2e-3);
  const WaveContext ctx = WaveContext::from_frequency(2.2e9);
  const double k = ctx.k0;
  const cplx samples[] = {cplx(0.3 * k), cplx(0.92 * k), cplx(1.25 * k), cplx(3.7 * k),
                          cplx(1.4 * k, -0.2 * k)};
  for (const cplx kr : samples) {
    const AirPair want = air_parallel_closed_form(kr, ctx, air.h);
    const cplx tm = tm_impedance(kr, air, ctx);
    const cplx te = te_impedance(kr, air, ctx);
    CHECK(std::abs(tm - want.tm) <= 1e-12 * std::abs(want.tm));
    CHECK(std::abs(te - want.te) <= 1e-12 * std::abs(want.te));
  }
}

TEST_CASE("normal wavenumbers stay on the decaying branch") {
  const SubstrateStack stack(cplx(4.0, -0.08), 3.3e-3);
  const WaveContext ctx = WaveContext::from_frequency(1.9e9);
  const double k = ctx.k0;
  for (const cplx kr : {cplx(0.2 * k), cplx(0.999 * k), cplx(1.7 * k), cplx(40.0 * k),
                        cplx(2.0 * k, -0.5 * k), cplx(0.5 * k, 0.3 * k)}) {
    CHECK(kz_air(kr, ctx).imag() <= 0.0);
    CHECK(kz_diel(kr, stack, ctx).imag() <= 0.0);
  }
  // Propagating below k, evanescent above (lossless air numbers).
  const WaveContext actx = ctx;
  CHECK(kz_air(cplx(0.6 * k), actx).real() == doctest::Approx(0.8 * k).epsilon(1e-12));
  const cplx ev = kz_air(cplx(1.25 * k), actx);
  CHECK(std::abs(ev.real()) < 1e-9 * k);
  CHECK(ev.imag() == doctest::Approx(-0.75 * k).epsilon(1e-12));
}

TEST_CASE("spectral dyad: longitudinal/transverse split, symmetry, evenness") {
  const SubstrateStack stack(cplx(4.29, -4.29 * 0.015), 3.3e-3);
  const WaveContext ctx = WaveContext::from_frequency(1.9e9);
  const double k = ctx.k0;
  // On-axis the dyad is diagonal with the scalar impedances.
  const double kr = 1.35 * k;
  const Eigen::Matrix2cd gx = spectral_dyad(kr, 0.0, stack, ctx);
  CHECK(std::abs(gx(0, 0) - tm_impedance(cplx(kr), stack, ctx)) < 1e-12 * std::abs(gx(0, 0)));
  CHECK(std::abs(gx(1, 1) - te_impedance(cplx(kr), stack, ctx)) < 1e-12 * std::abs(gx(1, 1)));
  CHECK(std::abs(gx(0, 1)) < 1e-14 * std::abs(gx(0, 0)));
  const Eigen::Matrix2cd gy = spectral_dyad(0.0, kr, stack, ctx);
  CHECK(std::abs(gy(0, 0) - gx(1, 1)) < 1e-12 * std::abs(gx(1, 1)));
  CHECK(std::abs(gy(1, 1) - gx(0, 0)) < 1e-12 * std::abs(gx(0, 0)));
  // Off axis: complex symmetric, even, and equal to the unit-vector split.
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 25; ++i) {
    const double kx = u(rng) * k, ky = u(rng) * k;
    if (std::hypot(kx, ky) < 1e-3 * k) continue;
    const Eigen::Matrix2cd g = spectral_dyad(kx, ky, stack, ctx);
    const Eigen::Matrix2cd gm = spectral_dyad(-kx, -ky, stack, ctx);
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-13 * g.cwiseAbs().maxCoeff());
    CHECK((g - gm).cwiseAbs().maxCoeff() < 1e-13 * g.cwiseAbs().maxCoeff());
    const double krho = std::hypot(kx, ky);
    const double cs = kx / krho, sn = ky / krho;
    const cplx ztm = tm_impedance(cplx(krho), stack, ctx);
    const cplx zte = te_impedance(cplx(krho), stack, ctx);
    Eigen::Matrix2cd want;
    want(0, 0) = ztm * cs * cs + zte * sn * sn;
    want(1, 1) = ztm * sn * sn + zte * cs * cs;
    want(0, 1) = want(1, 0) = (ztm - zte) * cs * sn;
    CHECK((g - want).cwiseAbs().maxCoeff() < 1e-12 * want.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("dipole far field over an air slab matches image theory") {
  const double h = 5.1e-3;
  const SubstrateStack air(cplx(1.0, 0.0), h);
  const WaveContext ctx = WaveContext::from_frequency(2.7e9);
  const cplx moment(1.7e-3, 0.9e-3);
  const double scale = ctx.k0 * z0 * std::abs(moment) / (2.0 * pi);
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> ut(0.0, 0.4999 * pi);
  std::uniform_real_distribution<double> up(0.0, 2.0 * pi);
  for (int i = 0; i < 20; ++i) {
    const double theta = ut(rng), phi = up(rng);
    const FarField want = image_theory_x(theta, phi, moment, ctx.k0, h);
    const FarField got = hed_farfield(theta, phi, Orientation::x, moment, air, ctx);
    CHECK(std::abs(got.f_theta - want.f_theta) < 1e-10 * scale);
    CHECK(std::abs(got.f_phi - want.f_phi) < 1e-10 * scale);
    // A y dipole is the x pattern rotated a quarter turn.
    const FarField want_y = image_theory_x(theta, phi - 0.5 * pi, moment, ctx.k0, h);
    const FarField got_y = hed_farfield(theta, phi, Orientation::y, moment, air, ctx);
    CHECK(std::abs(got_y.f_theta - want_y.f_theta) < 1e-10 * scale);
    CHECK(std::abs(got_y.f_phi - want_y.f_phi) < 1e-10 * scale);
  }
}

TEST_CASE("far field: zenith consistency, horizon rejection, linearity") {
  const SubstrateStack stack(cplx(4.29, -4.29 * 0.015), 3.3e-3);
  const WaveContext ctx = WaveContext::from_frequency(1.9e9);
  const cplx m(2.0e-3, 0.0);
  // At zenith the polarization basis is degenerate: the theta component along
  // phi = 0 equals minus the phi component a quarter turn later.
  const FarField a = hed_farfield(0.0, 0.0, Orientation::x, m, stack, ctx);
  const FarField b = hed_farfield(0.0, 0.5 * pi, Orientation::x, m, stack, ctx);
  CHECK(std::abs(a.f_theta + b.f_phi) < 1e-12 * std::abs(a.f_theta));
  CHECK(std::abs(a.f_theta) > 0.0);
  CHECK_THROWS_AS(hed_farfield(0.5 * pi, 0.3, Orientation::x, m, stack, ctx), std::domain_error);
  CHECK_THROWS_AS(hed_farfield(0.6 * pi, 0.3, Orientation::x, m, stack, ctx), std::domain_error);
  const FarField two = hed_farfield(0.4, 1.1, Orientation::x, 2.0 * m, stack, ctx);
  const FarField one = hed_farfield(0.4, 1.1, Orientation::x, m, stack, ctx);
  CHECK(std::abs(two.f_theta - 2.0 * one.f_theta) < 1e-14 * std::abs(two.f_theta));
  CHECK(std::abs(two.f_phi - 2.0 * one.f_phi) < 1e-14 * std::abs(two.f_phi));
}

TEST_CASE("surface-wave poles: thin lossless slab carries one true TM root") {
  const SubstrateStack stack(cplx(4.0, 0.0), 3.3e-3);
  const WaveContext ctx = WaveContext::from_frequency(1.9e9);
  const double k = ctx.k0;
  const auto poles = find_surface_wave_poles(stack, ctx);
  REQUIRE(poles.size() == 1);
  const SurfaceWavePole& p = poles[0];
  CHECK_FALSE(p.te);
  CHECK(p.k_rho.imag() == 0.0);
  CHECK(p.k_rho.real() > k);
  CHECK(p.k_rho.real() < 2.0 * k);
  // Residue against Richardson-extrapolated (k_rho - k_p) * Z samples.
  const double d = 1e-6 * k;
  const cplx r1 = tm_impedance(p.k_rho + d, stack, ctx) * d;
  const cplx r2 = tm_impedance(p.k_rho + 2.0 * d, stack, ctx) * (2.0 * d);
  const cplx extrap = 2.0 * r1 - r2;
  CHECK(std::abs(extrap - p.residue) < 1e-6 * std::abs(p.residue));
  // No poles without dielectric contrast.
  CHECK(find_surface_wave_poles(SubstrateStack(cplx(1.0, 0.0), 3.3e-3), ctx).empty());
  CHECK(stack.single_tm_mode(ctx.lambda0));
  CHECK_FALSE(stack.single_tm_mode(c0 / 30.0e9));
}

TEST_CASE("surface-wave poles: a thick slab adds a TE root with its residue") {
  const WaveContext ctx = WaveContext::from_frequency(1.9e9);
  const double h = 0.2 * ctx.lambda0;  // past the TE1 cutoff h = lambda/(4 sqrt(3))
  const SubstrateStack stack(cplx(4.0, 0.0), h);
  const auto poles = find_surface_wave_poles(stack, ctx);
  REQUIRE(poles.size() == 2);
  int n_te = 0;
  for (const SurfaceWavePole& p : poles) {
    CHECK(p.k_rho.real() > ctx.k0);
    CHECK(p.k_rho.real() < 2.0 * ctx.k0);
    const double d = 1e-6 * ctx.k0;
    const auto imp = [&](cplx kr) {
      return p.te ? te_impedance(kr, stack, ctx) : tm_impedance(kr, stack, ctx);
    };
    const cplx extrap = 2.0 * (imp(p.k_rho + d) * d) - imp(p.k_rho + 2.0 * d) * (2.0 * d);
    CHECK(std::abs(extrap - p.residue) < 1e-6 * std::abs(p.residue));
    n_te += p.te ? 1 : 0;
  }
  CHECK(n_te == 1);
}

TEST_CASE("surface-wave poles move continuously into the lower half plane") {
  const WaveContext ctx = WaveContext::from_frequency(1.9e9);
  const auto lossless = find_surface_wave_poles(SubstrateStack(cplx(4.0, 0.0), 3.3e-3), ctx);
  const auto nearly =
      find_surface_wave_poles(SubstrateStack(cplx(4.0, -4.0 * 1e-6), 3.3e-3), ctx);
  const auto lossy = find_surface_wave_poles(SubstrateStack(cplx(4.0, -4.0 * 0.02), 3.3e-3), ctx);
  REQUIRE(lossless.size() == 1);
  REQUIRE(nearly.size() == 1);
  REQUIRE(lossy.size() == 1);
  CHECK(std::abs(nearly[0].k_rho - lossless[0].k_rho) < 1e-4 * ctx.k0);
  CHECK(std::abs(nearly[0].residue - lossless[0].residue) < 1e-3 * std::abs(lossless[0].residue));
  CHECK(lossy[0].k_rho.imag() < 0.0);
  // Residue still matches the local Laurent behaviour for the lossy pole.
  const SubstrateStack stack(cplx(4.0, -4.0 * 0.02), 3.3e-3);
  const double d = 1e-6 * ctx.k0;
  const cplx extrap = 2.0 * (tm_impedance(lossy[0].k_rho + d, stack, ctx) * d) -
                      tm_impedance(lossy[0].k_rho + 2.0 * d, stack, ctx) * (2.0 * d);
  CHECK(std::abs(extrap - lossy[0].residue) < 1e-6 * std::abs(lossy[0].residue));
}

TEST_CASE("large-argument impedance tails converge at second order") {
  const SubstrateStack stack(cplx(4.0, 0.0), 3.3e-3);
  const WaveContext ctx = WaveContext::from_frequency(1.9e9);
  const double k = ctx.k0;
  const auto err = [&](double kr, bool te) {
    const cplx z = te ? te_impedance(cplx(kr), stack, ctx) : tm_impedance(cplx(kr), stack, ctx);
    const cplx t =
        te ? te_impedance_tail(cplx(kr), ctx) : tm_impedance_tail(cplx(kr), stack, ctx);
    return std::abs(z - t) / std::abs(t);
  };
  for (const bool te : {false, true}) {
    const double e50 = err(50.0 * k, te), e100 = err(100.0 * k, te);
    CHECK(e50 < 1e-2);
    CHECK(e50 / e100 == doctest::Approx(4.0).epsilon(0.2));
  }
}
