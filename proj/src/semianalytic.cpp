#include "patchbound/semianalytic.hpp"

#include <cmath>
#include <stdexcept>

namespace patchbound {

double delta_sw(const SubstrateStack& stack, const WaveContext& ctx) {
  const double er = stack.eps_r.real();
  const double kh = ctx.k0 * stack.h;
  const double num = (3.0 * pi / 4.0) * std::pow(er - 1.0, 3) * kh;
  const double den = er * er * (er - 1.0) + 0.4 * er;
  return num / den;
}

double delta_rho(double delta_total, double delta_sw_value) {
  return delta_total - delta_sw_value;
}

double efficiency_from_q(double q, double tan_delta, double delta_sw_value) {
  if (!(q > 0.0)) {
    throw std::invalid_argument("[ERROR] efficiency_from_q(): Q must be positive.");
  }
  if (!(q * tan_delta < 1.0)) {
    throw std::invalid_argument(
        "[ERROR] efficiency_from_q(): Q tan_delta must be below 1 for a radiating resonator.");
  }
  return (1.0 - q * tan_delta) / (1.0 + delta_sw_value);
}

double q_lossless(double q, double tan_delta) {
  if (!(q > 0.0)) {
    throw std::invalid_argument("[ERROR] q_lossless(): Q must be positive.");
  }
  if (!(q * tan_delta < 1.0)) {
    throw std::invalid_argument("[ERROR] q_lossless(): Q tan_delta must be below 1.");
  }
  return q / (1.0 - q * tan_delta);
}

double eta_ub_from_qlb(double q_lb, double tan_delta, double delta_sw_value) {
  if (!(q_lb > 0.0)) {
    throw std::invalid_argument("[ERROR] eta_ub_from_qlb(): Q_lb must be positive.");
  }
  return 1.0 / ((q_lb * tan_delta + 1.0) * (delta_sw_value + 1.0));
}

double eta_ub_from_qlb_ohmic(double q_lb, double r_s, const SubstrateStack& stack,
                             const WaveContext& ctx, OhmicExtent extent) {
  if (!(r_s >= 0.0)) {
    throw std::invalid_argument("[ERROR] eta_ub_from_qlb_ohmic(): R_s must be nonnegative.");
  }
  const double kh = ctx.k0 * stack.h;
  const double sheets = extent == OhmicExtent::patch_and_ground ? 2.0 : 1.0;
  const double tan_equiv = sheets * r_s / (kh * z0);
  return eta_ub_from_qlb(q_lb, tan_equiv, delta_sw(stack, ctx));
}

PipelineReport appendix_pipeline(const QLinkInput& in) {
  if (!(in.f_meas > 0.0) || !(in.f_target > 0.0)) {
    throw std::invalid_argument("[ERROR] appendix_pipeline(): frequencies must be positive.");
  }
  const SubstrateStack stack(in.eps_r, in.h);
  const double td = stack.tan_delta();
  const WaveContext ctx_meas = WaveContext::from_frequency(in.f_meas);
  const WaveContext ctx_target = WaveContext::from_frequency(in.f_target);

  PipelineReport rep;
  rep.delta_sw_meas = delta_sw(stack, ctx_meas);
  rep.eta_meas = efficiency_from_q(in.q, td, rep.delta_sw_meas);
  rep.q_lb_meas = q_lossless(in.q, td);

  if (const auto* pinned = std::get_if<QScalingPinned>(&in.scaling)) {
    rep.q_lb_target = pinned->q_lb_target;
  } else {
    const auto& pl = std::get<QScalingPowerLaw>(in.scaling);
    rep.q_lb_target = rep.q_lb_meas * std::pow(in.f_meas / in.f_target, pl.exponent);
  }

  rep.delta_sw_target = delta_sw(stack, ctx_target);
  rep.eta_ub_target = eta_ub_from_qlb(rep.q_lb_target, td, rep.delta_sw_target);

  rep.single_tm_mode_meas = stack.single_tm_mode(ctx_meas.lambda0);
  rep.single_tm_mode_target = stack.single_tm_mode(ctx_target.lambda0);
  if (!rep.single_tm_mode_meas || !rep.single_tm_mode_target) {
    rep.warning =
        "slab supports TE modes (h > lambda/(4 sqrt(eps_r'-1))); thin-substrate "
        "surface-wave factor is unreliable here";
  }
  return rep;
}

}  // namespace patchbound
