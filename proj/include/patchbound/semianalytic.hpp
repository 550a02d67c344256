// Thin-substrate surface-wave dissipation factor and the Q-factor link
// between measured bandwidth and radiation-efficiency bounds.
#pragma once

#include <string>
#include <variant>

#include "patchbound/greens.hpp"

namespace patchbound {

// Surface-wave dissipation factor of a thin grounded slab,
// (3 pi / 4) (er - 1)^3 kh / (er^2 (er - 1) + (2/5) er), er = Re(eps_r).
double delta_sw(const SubstrateStack& stack, const WaveContext& ctx);

// Residual dissipation factor after removing the surface-wave part. Not
// clamped: a negative value signals an inconsistent input pair.
double delta_rho(double delta_total, double delta_sw_value);

// eta = (1 - Q tan_delta) / (1 + delta_sw); valid while Q tan_delta < 1.
double efficiency_from_q(double q, double tan_delta, double delta_sw_value);

// Q_lb = Q / (1 - Q tan_delta), the lossless-dielectric Q recovered from a
// measured (lossy) Q.
double q_lossless(double q, double tan_delta);

// eta_ub = 1 / ((Q_lb tan_delta + 1) (delta_sw + 1)).
double eta_ub_from_qlb(double q_lb, double tan_delta, double delta_sw_value);

enum class OhmicExtent { patch_only, patch_and_ground };

// Ohmic variant: tan_delta -> R_s/(kh Z0) per conductor sheet.
double eta_ub_from_qlb_ohmic(double q_lb, double r_s, const SubstrateStack& stack,
                             const WaveContext& ctx, OhmicExtent extent);

// Frequency-scaling rule for Q_lb between the measured and target frequency.
struct QScalingPinned {
  double q_lb_target = 0.0;
};
struct QScalingPowerLaw {
  double exponent = 5.0;
};
using QScalingRule = std::variant<QScalingPinned, QScalingPowerLaw>;

struct QLinkInput {
  double q = 0.0;          // measured half-power Q at f_meas
  double f_meas = 0.0;     // Hz
  double f_target = 0.0;   // Hz
  cplx eps_r{1.0, 0.0};
  double h = 0.0;          // m
  QScalingRule scaling = QScalingPowerLaw{};
};

struct PipelineReport {
  double delta_sw_meas = 0.0;
  double eta_meas = 0.0;
  double q_lb_meas = 0.0;
  double q_lb_target = 0.0;
  double delta_sw_target = 0.0;
  double eta_ub_target = 0.0;
  bool single_tm_mode_meas = true;
  bool single_tm_mode_target = true;
  std::string warning;
};

// Bandwidth-to-bound pipeline: surface-wave factor and efficiency at the
// measurement point, lossless Q recovery, frequency scaling, and the
// efficiency upper bound at the target frequency.
PipelineReport appendix_pipeline(const QLinkInput& in);

}  // namespace patchbound
