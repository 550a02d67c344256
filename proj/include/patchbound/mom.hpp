// Spectral-domain assembly of the patch operators: impedance matrix with
// asymptotic extraction and surface-wave pole subtraction, resistance and
// reactance split, Ohmic Gram operator, far-field rows, hemisphere-quadrature
// radiation operator and power functionals.
#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "patchbound/constants.hpp"
#include "patchbound/geometry.hpp"
#include "patchbound/greens.hpp"

namespace patchbound {

struct AssemblyOptions {
  double kmax_factor = 12.0;  // spectral truncation K = kmax_factor * pi / min(dx, dy)
  double phase_budget = 8.0;  // worst-case phase swing (radians) per radial panel
  int gl_order = 16;          // Gauss-Legendre nodes per radial panel
  int min_panels = 2;         // panels added to every region beyond the phase estimate
  bool extract_poles = true;  // residue subtraction of surface-wave poles
  int n_theta = 64;           // hemisphere rule: Gauss-Legendre points in cos(theta)
  int n_phi = 128;            // hemisphere rule: uniform points in phi; must be even
  int threads = 1;            // panel-level workers; results are thread-count invariant
  double tail_abort = 1e-3;   // fail when the outermost panel still carries this share
};

// Diagnostics of one assembly run.
struct QuadratureInfo {
  double k_max = 0.0;         // truncation radius actually used
  double kappa_a = 0.0;       // split radius between exact and asymptotic handling
  int panels_radiating = 0;   // [0, k] disk
  int panels_trapped = 0;     // [k, kappa_a] annulus (pole band)
  int panels_tail = 0;        // [kappa_a, k_max], integrand minus its asymptote
  int panels_asymptotic = 0;  // numeric complement of the closed-form asymptote
  int n_poles = 0;            // surface-wave poles subtracted
  double tail_fraction = 0.0; // outermost panel's share of the assembled tables
  int n_theta = 0, n_phi = 0;
};

// Immutable bundle of every operator the bound solvers consume.
struct OperatorSet {
  BasisSet basis;
  SubstrateStack stack{cplx(1.0, 0.0), 1e-3};
  WaveContext wave;
  double r_s = 0.0;
  std::uint64_t mesh_id = 0;

  Eigen::MatrixXcd z;      // N x N complex-symmetric impedance (Ohm)
  Eigen::MatrixXcd r;      // Hermitian part of z
  Eigen::MatrixXcd x;      // anti-Hermitian part of z
  Eigen::MatrixXcd r_ohm;  // conductor-loss Gram operator, r_s included
  Eigen::MatrixXcd f_s;    // M x N weighted hemisphere far-field rows
  Eigen::MatrixXcd r_r;    // radiation operator f_s^H f_s
  QuadratureInfo quad;
};

// Galerkin impedance matrix over the spectral plane in polar form. Entries
// depend only on the anchor offset and orientation pair, so one radial sweep
// fills offset tables that are then scattered into the full matrix. Lossless
// stacks require pole extraction (throws std::runtime_error otherwise).
Eigen::MatrixXcd assemble_impedance(const BasisSet& basis, const SubstrateStack& stack,
                                    const WaveContext& ctx, const AssemblyOptions& opts = {},
                                    QuadratureInfo* info = nullptr);

// Hermitian split z = r + j x.
void split_rx(const Eigen::MatrixXcd& z, Eigen::MatrixXcd& r, Eigen::MatrixXcd& x);

// Sheet-resistance loss operator R_s * (rooftop overlap Gram matrix), from
// the closed-form overlaps on the uniform grid. Throws on negative R_s.
Eigen::MatrixXcd ohmic_gram(const BasisSet& basis, double r_s);

// Unweighted 2 x N far-field rows (theta and phi components) toward
// (theta, phi): each basis contributes its dipole pattern times its spectrum
// at the radiating transverse wavenumber.
Eigen::MatrixXcd farfield_rows(const BasisSet& basis, const SubstrateStack& stack,
                               const WaveContext& ctx, double theta, double phi);

// Weighted hemisphere sampling F_s (rows scaled by sqrt(w/Z0)), so the
// radiated power of a current is exactly 0.5 I^H (F_s^H F_s) I. Gauss-Legendre
// in cos(theta) on (0, 1) times a uniform even-count rule in phi; interior
// nodes only, so grazing incidence is never sampled.
Eigen::MatrixXcd radiation_operator(const BasisSet& basis, const SubstrateStack& stack,
                                    const WaveContext& ctx, int n_theta, int n_phi);

// Full bundle at one frequency.
OperatorSet assemble_operators(const BasisSet& basis, const SubstrateStack& stack, double f_hz,
                               double r_s, const AssemblyOptions& opts = {});

struct PowerReport {
  double p_delivered = 0.0;  // 0.5 I^H (R + R_ohm) I
  double p_radiated = 0.0;   // 0.5 I^H R_r I
  double p_ohmic = 0.0;      // 0.5 I^H R_ohm I
  double p_substrate = 0.0;  // delivered - radiated - ohmic
  double delta = 0.0;        // (p_delivered - p_radiated) / p_radiated
  double delta_rho = 0.0;    // p_ohmic / p_radiated
  double eta = 0.0;          // p_radiated / p_delivered = 1 / (1 + delta)
};

// Loss bookkeeping of one current. Throws std::runtime_error when the
// radiated power is not positive (efficiency undefined).
PowerReport power_report(const OperatorSet& ops, const Eigen::VectorXcd& current);

// Stable fingerprint of the mesh (extents, grid, active cells) for cache keys.
std::uint64_t mesh_hash(const Mesh& mesh);

}  // namespace patchbound
