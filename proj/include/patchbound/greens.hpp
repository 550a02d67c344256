// Grounded dielectric slab: transverse equivalent network, spectral dyad,
// horizontal-dipole far field and surface-wave poles. Time convention
// exp(+j omega t); fields radiate into z > 0 above the slab.
#pragma once

#include <vector>

#include <Eigen/Core>

#include "patchbound/constants.hpp"
#include "patchbound/geometry.hpp"

namespace patchbound {

// Grounded slab: PEC at the bottom, dielectric of thickness h (meters) and
// relative permittivity eps_r = eps_r' (1 - j tan_delta), air above. Currents
// live on the air-dielectric interface.
struct SubstrateStack {
  cplx eps_r{1.0, 0.0};
  double h = 0.0;

  SubstrateStack(cplx eps_r_, double h_);
  double tan_delta() const { return -eps_r.imag() / eps_r.real(); }
  bool lossless() const { return eps_r.imag() == 0.0; }
  // TE1 stays cut off while h < lambda / (4 sqrt(eps_r' - 1)).
  bool single_tm_mode(double lambda0) const;
};

struct WaveContext {
  double f = 0.0;        // Hz
  double omega = 0.0;    // rad/s
  double k0 = 0.0;       // free-space wavenumber, rad/m
  double lambda0 = 0.0;  // m

  static WaveContext from_frequency(double f);
  double lambda_eps(const SubstrateStack& stack) const;
};

// Normal wavenumbers, branch Im <= 0 (decay away from the slab).
cplx kz_air(cplx k_rho, const WaveContext& ctx);
cplx kz_diel(cplx k_rho, const SubstrateStack& stack, const WaveContext& ctx);

// Transverse-network scalar impedances seen by a current sheet at the
// interface: parallel combination of the air half-space and the shorted slab.
cplx tm_impedance(cplx k_rho, const SubstrateStack& stack, const WaveContext& ctx);
cplx te_impedance(cplx k_rho, const SubstrateStack& stack, const WaveContext& ctx);

// Large-k_rho asymptotes of the parallel impedances (independent of h).
cplx tm_impedance_tail(cplx k_rho, const SubstrateStack& stack, const WaveContext& ctx);
cplx te_impedance_tail(cplx k_rho, const WaveContext& ctx);

// 2x2 spectral dyad G(kx, ky) mapping a spectral surface current to the
// tangential electric field it produces at the interface, convention
// E = -G J. Complex symmetric; even under k -> -k.
Eigen::Matrix2cd spectral_dyad(double kx, double ky, const SubstrateStack& stack,
                               const WaveContext& ctx);

struct FarField {
  cplx f_theta{0.0, 0.0};
  cplx f_phi{0.0, 0.0};
};

// Far field F = lim r exp(+j k r) E of a horizontal electric dipole of moment
// `moment` (A m) on the interface, phase referenced to the interface plane.
// Valid for theta in [0, pi/2); a y-oriented dipole is the x pattern with
// phi -> phi - pi/2. Throws std::domain_error at or below the horizon.
FarField hed_farfield(double theta, double phi, Orientation orient, cplx moment,
                      const SubstrateStack& stack, const WaveContext& ctx);

// Surface-wave pole of the parallel TM or TE impedance: location in the
// k_rho plane (Im <= 0), residue of the impedance there, and polarization.
struct SurfaceWavePole {
  cplx k_rho{0.0, 0.0};
  cplx residue{0.0, 0.0};
  bool te = false;
};

// All proper surface-wave poles with Re k_rho in (k0, k0 sqrt(eps_r')).
// Lossless stacks give real locations; lossy stacks are Newton-refined into
// the lower half plane starting from the lossless roots.
std::vector<SurfaceWavePole> find_surface_wave_poles(const SubstrateStack& stack,
                                                     const WaveContext& ctx);

}  // namespace patchbound
