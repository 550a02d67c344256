// Acceptance suite: ten end-to-end criteria, one PASS/FAIL line each.
// Tolerances are pinned in the checks; measured values are printed on the
// line so a failure is diagnosable from the log alone. The binary exits
// nonzero when any criterion fails.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "patchbound/bounds.hpp"
#include "patchbound/config.hpp"
#include "patchbound/geometry.hpp"
#include "patchbound/greens.hpp"
#include "patchbound/mom.hpp"
#include "patchbound/semianalytic.hpp"
#include "patchbound/sweep.hpp"

using namespace patchbound;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Collects sub-check failures for one criterion.
struct Checker {
  std::vector<std::string> bad;
  void require(bool ok, const std::string& what) {
    if (!ok) bad.push_back(what);
  }
  void window(double value, double center, double tol, const std::string& what) {
    require(std::abs(value - center) <= tol,
            what + " = " + num(value) + " outside " + num(center) + " +/- " + num(tol));
  }
};

// Runs one criterion, prints exactly one line. `budget_s <= 0` disables the
// runtime check.
void criterion(int id, const std::string& title, double budget_s,
               const std::function<std::string(Checker&)>& body) {
  Checker ck;
  std::string detail;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    detail = body(ck);
  } catch (const std::exception& e) {
    ck.bad.push_back(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0.0 && secs > budget_s)
    ck.bad.push_back("runtime " + num(secs) + " s exceeds " + num(budget_s) + " s");
  std::string line = ck.bad.empty() ? "PASS" : "FAIL";
  line += "  " + title;
  if (!detail.empty()) line += ": " + detail;
  line += " [" + num(secs) + " s]";
  for (const std::string& b : ck.bad) line += " | " + b;
  std::printf("[criterion %2d] %s\n", id, line.c_str());
  std::fflush(stdout);
  if (!ck.bad.empty()) ++g_failures;
}

BasisSet make_patch(int nx, int ny, double lx, double ly) {
  return build_basis(build_mesh(DesignRegion{lx, ly}, nx, ny, ShapeMask::full()));
}

MatrixXcd random_complex(int rows, int cols, std::mt19937& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXcd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

MatrixXcd random_psd(int n, int rank, std::mt19937& rng) {
  const MatrixXcd v = random_complex(n, rank, rng);
  return v * v.adjoint();
}

MatrixXcd random_indefinite(int n, std::mt19937& rng) {
  MatrixXcd a = random_complex(n, n, rng);
  MatrixXcd h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
  h -= 0.5 * (es.eigenvalues()(0) + es.eigenvalues()(n - 1)) * MatrixXcd::Identity(n, n);
  return h;
}

// Image-theory far field of an x dipole at height 0 over a ground plane at
// depth h, phase referenced to the dipole plane.
FarField image_theory_x(double theta, double phi, cplx moment, double k, double h) {
  const double ct = std::cos(theta);
  const cplx common =
      (k * z0 / (2.0 * pi)) * moment * std::sin(k * h * ct) * std::exp(-j1i * cplx(k * h * ct));
  return {common * ct * std::cos(phi), -common * std::sin(phi)};
}

double spectral_norm(const MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (m + m.adjoint()));
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Shared reference geometry: full rectangular region, ly = 0.77 lx,
// h = 0.05 lx, relative size measured against the substrate wavelength.
struct RefPoint {
  BasisSet basis;
  SubstrateStack stack;
  OperatorSet ops;
};

RefPoint reference_point(double size_over_lambda_eps, double eps_r_real, double tan_delta,
                         double r_s, int nx = 16, int ny = 12) {
  const double f = 1.0e9;
  const WaveContext ctx = WaveContext::from_frequency(f);
  const double lx = size_over_lambda_eps * ctx.lambda0 / std::sqrt(eps_r_real);
  RefPoint rp{make_patch(nx, ny, lx, 0.77 * lx),
              SubstrateStack(cplx(eps_r_real, -eps_r_real * tan_delta), 0.05 * lx),
              OperatorSet{}};
  rp.ops = assemble_operators(rp.basis, rp.stack, f, r_s);
  return rp;
}

}  // namespace

// --- criterion 1: closed-form bandwidth-to-bound worked example ------------
static void c1() {
  criterion(1, "bandwidth-to-bound worked example", 1.0, [](Checker& ck) {
    const SubstrateStack fr4(cplx(4.29, -4.29 * 0.015), 3.3e-3);
    const WaveContext at19 = WaveContext::from_frequency(1.9e9);
    const WaveContext at15 = WaveContext::from_frequency(1.5e9);
    const double dsw19 = delta_sw(fr4, at19);
    const double eta19 = efficiency_from_q(25.4, 0.015, dsw19);
    const double q_lb = q_lossless(25.4, 0.015);
    const double dsw15 = delta_sw(fr4, at15);
    const double eta15 = eta_ub_from_qlb(135.4, 0.015, dsw15);
    ck.window(dsw19, 0.178, 1e-3, "delta_sw(1.9 GHz)");
    ck.window(eta19, 0.526, 2e-3, "eta(1.9 GHz)");
    ck.window(q_lb, 41.0, 0.1, "q_lb");
    ck.window(dsw15, 0.140, 1e-3, "delta_sw(1.5 GHz)");
    ck.window(eta15, 0.290, 3e-3, "eta_ub(1.5 GHz, q_lb = 135.4)");
    return "delta_sw=" + num(dsw19) + " eta=" + num(eta19) + " q_lb=" + num(q_lb) +
           " delta_sw15=" + num(dsw15) + " eta_ub15=" + num(eta15);
  });
}

// --- criterion 2: the two efficiency routes are one identity ---------------
static void c2() {
  criterion(2, "efficiency-route equivalence on 1e4 random inputs", 1.0, [](Checker& ck) {
    std::mt19937 rng(20240901);
    std::uniform_real_distribution<double> uprod(1e-4, 0.999);
    std::uniform_real_distribution<double> ut(1e-5, 0.1);
    std::uniform_real_distribution<double> ud(0.0, 0.6);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double td = ut(rng), q = uprod(rng) / td, d = ud(rng);
      const double direct = efficiency_from_q(q, td, d);
      const double recovered = eta_ub_from_qlb(q_lossless(q, td), td, d);
      worst = std::max(worst, std::abs(direct - recovered) / std::abs(direct));
    }
    ck.require(worst <= 1e-12, "worst relative route mismatch " + num(worst) + " > 1e-12");
    return "worst relative mismatch " + num(worst);
  });
}

// --- criterion 3: far-field and radiated-power oracles ----------------------
static void c3() {
  criterion(3, "dipole far field and radiated power against image theory", 10.0, [](Checker& ck) {
    // (a) Air-slab far field equals the image-theory pattern at 20 angles.
    const double h = 5.1e-3;
    const SubstrateStack air(cplx(1.0, 0.0), h);
    const WaveContext ctx = WaveContext::from_frequency(2.7e9);
    const cplx moment(1.7e-3, 0.9e-3);
    const double scale = ctx.k0 * z0 * std::abs(moment) / (2.0 * pi);
    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> utheta(0.0, 0.4999 * pi);
    std::uniform_real_distribution<double> uphi(0.0, 2.0 * pi);
    double worst_ff = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double theta = utheta(rng), phi = uphi(rng);
      const FarField want = image_theory_x(theta, phi, moment, ctx.k0, h);
      const FarField got = hed_farfield(theta, phi, Orientation::x, moment, air, ctx);
      worst_ff = std::max({worst_ff, std::abs(got.f_theta - want.f_theta) / scale,
                           std::abs(got.f_phi - want.f_phi) / scale});
    }
    ck.require(worst_ff < 1e-10, "far-field mismatch " + num(worst_ff) + " >= 1e-10");

    // (b) One tiny rooftop radiates the closed-form image-theory power; the
    // hemisphere-quadrature operator must match to 0.1%.
    const double f = 3.0e9;
    const WaveContext c3ctx = WaveContext::from_frequency(f);
    const double lx = c3ctx.lambda0 / 100.0, ly = c3ctx.lambda0 / 200.0;
    const double hd = 0.02 * c3ctx.lambda0;
    const BasisSet basis = make_patch(2, 1, lx, ly);
    const OperatorSet ops = assemble_operators(basis, SubstrateStack(cplx(1.0, 0.0), hd), f, 0.0);
    const double p_quad = 0.5 * ops.r_r(0, 0).real();
    const double k = c3ctx.k0, m = basis.mesh.dx * basis.mesh.dy;
    const double a = 2.0 * k * hd;
    const double int_u2_cos = ((a * a - 2.0) * std::sin(a) + 2.0 * a * std::cos(a)) / (a * a * a);
    const double integral = 0.5 * (1.0 / 3.0 + 1.0) - 0.5 * (int_u2_cos + std::sin(a) / a);
    const double c_mag = z0 * k * m / (2.0 * pi);
    const double p_ref = c_mag * c_mag * pi / (2.0 * z0) * integral;
    const double p_err = std::abs(p_quad / p_ref - 1.0);
    ck.require(p_err < 1e-3, "radiated-power mismatch " + num(p_err) + " >= 0.1%");
    return "far-field err " + num(worst_ff) + ", power err " + num(p_err);
  });
}

// --- criterion 4: optimizer certificates and brute-force agreement ----------
static void c4() {
  criterion(4, "optimizer certification on random ensembles", 60.0, [](Checker& ck) {
    std::mt19937 rng(1234);
    double worst_gap = 0.0, worst_res = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const MatrixXcd r_r = random_psd(8, 3, rng);
      const MatrixXcd r_tot = r_r + random_psd(8, 8, rng) + 0.1 * MatrixXcd::Identity(8, 8);
      const MatrixXcd x = random_indefinite(8, rng);
      const BoundResult res = efficiency_ub_resonant(r_r, r_tot, x);
      ck.require(res.certified, "trial " + std::to_string(trial) + " not certified");
      worst_gap = std::max(worst_gap, res.rel_gap);
      worst_res = std::max({worst_res, res.res_resonance, res.res_power});
    }
    ck.require(worst_gap < 1e-6, "worst relative gap " + num(worst_gap) + " >= 1e-6");
    ck.require(worst_res < 1e-8, "worst constraint residual " + num(worst_res) + " >= 1e-8");

    // 3x3 instance against a > 1e6-sample primal grid search on the exactly
    // parametrized constraint manifold |I_1| = |I_2|, R_tot = I.
    MatrixXcd v(3, 2);
    v << cplx(1.0, 0.0), cplx(0.3, 0.2), cplx(0.5, -0.4), cplx(0.0, -0.7), cplx(0.0, 0.2),
        cplx(0.9, 0.0);
    const MatrixXcd r_r3 = v * v.adjoint();
    MatrixXcd x3 = MatrixXcd::Zero(3, 3);
    x3(0, 0) = 1.0;
    x3(1, 1) = -1.0;
    const BoundResult res3 = efficiency_ub_resonant(r_r3, MatrixXcd::Identity(3, 3), x3);
    ck.require(res3.certified, "3x3 instance not certified");
    const auto value_at = [&](double s, double q, double r) {
      const double c = std::sqrt(std::max(0.0, 1.0 - 2.0 * s * s));
      VectorXcd i(3);
      i << cplx(s, 0.0), s * std::polar(1.0, q), c * std::polar(1.0, r);
      return (i.adjoint() * r_r3 * i).real()(0);
    };
    const double smax = 1.0 / std::sqrt(2.0);
    double bs = 0.0, bq = 0.0, br = 0.0, best = -1.0;
    const int ns = 80, nph = 120;  // 80 * 120 * 120 = 1.152e6 coarse samples
    for (int is = 0; is < ns; ++is)
      for (int iq = 0; iq < nph; ++iq)
        for (int ir = 0; ir < nph; ++ir) {
          const double s = smax * is / (ns - 1);
          const double q = 2.0 * pi * iq / nph, r = 2.0 * pi * ir / nph;
          const double val = value_at(s, q, r);
          if (val > best) best = val, bs = s, bq = q, br = r;
        }
    double hs = smax / (ns - 1), hp = 2.0 * pi / nph;
    for (int level = 0; level < 2; ++level) {
      double nbs = bs, nbq = bq, nbr = br;
      for (int is = -20; is <= 20; ++is)
        for (int iq = -20; iq <= 20; ++iq)
          for (int ir = -20; ir <= 20; ++ir) {
            const double s = std::clamp(bs + hs * is / 20.0, 0.0, smax);
            const double q = bq + hp * iq / 20.0, r = br + hp * ir / 20.0;
            const double val = value_at(s, q, r);
            if (val > best) best = val, nbs = s, nbq = q, nbr = r;
          }
      bs = nbs, bq = nbq, br = nbr;
      hs /= 20.0, hp /= 20.0;
    }
    ck.require(best <= res3.value * (1.0 + 1e-9),
               "grid search beats the dual bound: " + num(best) + " > " + num(res3.value));
    ck.require(res3.value - best <= 1e-6 * res3.value,
               "dual bound " + num(res3.value) + " not attained by grid optimum " + num(best));
    return "worst gap " + num(worst_gap) + ", worst residual " + num(worst_res) +
           ", 3x3 dual " + num(res3.value) + " vs grid " + num(best);
  });
}

// --- criterion 5: efficiency bounds at the reference sizes ------------------
static void c5() {
  criterion(5, "resonant efficiency bounds at reference sizes (16x12 mesh)", 1800.0,
            [](Checker& ck) {
              struct Anchor {
                double size, tan_delta, center, tol;
              };
              const Anchor anchors[] = {
                  {0.5, 0.001, 0.80, 0.05},
                  {0.5, 0.1, 0.10, 0.03},
                  {1.0 / 3.0, 0.001, 0.60, 0.07},
                  {1.0 / 3.0, 0.1, 0.015, 0.01},
              };
              std::string detail;
              for (const Anchor& a : anchors) {
                const RefPoint rp = reference_point(a.size, 4.0, a.tan_delta, 0.0);
                const MatrixXcd r_tot = rp.ops.r + rp.ops.r_ohm;
                const BoundResult res = efficiency_ub_resonant(rp.ops.r_r, r_tot, rp.ops.x);
                ck.require(res.certified, "uncertified at size " + num(a.size) + ", tan_delta " +
                                              num(a.tan_delta) + ": " + res.diagnostic);
                ck.window(res.value, a.center, a.tol,
                          "eta_ub(size " + num(a.size) + ", tan_delta " + num(a.tan_delta) + ")");
                if (!detail.empty()) detail += ", ";
                detail += num(res.value);
              }
              return "eta_ub = {" + detail + "}";
            });
}

// --- criteria 6-8 share the reference operators at size 0.35 ---------------
struct MidSizeResults {
  std::vector<double> eta_ohmic;          // resonant bound per r_s
  std::vector<double> delta_rho_norm;     // (P_ohm / P_rad) * Z0 / r_s per r_s
  std::vector<double> collapse_diel;      // (delta - delta_sw) / tan_delta
  std::vector<double> directivity;        // of the gain-bound current per tan_delta
  std::vector<std::pair<double, double>> res_vs_nonres;
  double eta_pin_a = 0.0, eta_pin_b = 0.0;
};

static MidSizeResults mid_size_study(Checker& ck) {
  MidSizeResults out;
  // Ohmic family: one lossless assembly, swap the conductor-loss operator.
  const RefPoint base = reference_point(0.35, 4.0, 0.0, 0.0);
  for (const double rs : {0.0377, 0.377, 3.77}) {
    OperatorSet ops = base.ops;
    ops.r_s = rs;
    ops.r_ohm = ohmic_gram(base.basis, rs);
    const MatrixXcd r_tot = ops.r + ops.r_ohm;
    const BoundResult res = efficiency_ub_resonant(ops.r_r, r_tot, ops.x);
    const BoundResult nonres = efficiency_ub_nonresonant(ops.r_r, r_tot);
    ck.require(res.certified && nonres.certified, "uncertified at r_s " + num(rs));
    const PowerReport pw = power_report(ops, res.current);
    out.eta_ohmic.push_back(res.value);
    out.delta_rho_norm.push_back(pw.delta_rho * z0 / rs);
    out.res_vs_nonres.emplace_back(res.value, nonres.value);
  }
  // Delivered-power invariance on the middle resistivity.
  {
    OperatorSet ops = base.ops;
    ops.r_ohm = ohmic_gram(base.basis, 0.377);
    const MatrixXcd r_tot = ops.r + ops.r_ohm;
    BoundOptions lo, hi;
    lo.p_in = 0.5;
    hi.p_in = 2.0;
    out.eta_pin_a = efficiency_ub_resonant(ops.r_r, r_tot, ops.x, lo).value;
    out.eta_pin_b = efficiency_ub_resonant(ops.r_r, r_tot, ops.x, hi).value;
  }
  // Dielectric family: one assembly per loss tangent, no conductor loss.
  const WaveContext ctx = WaveContext::from_frequency(1.0e9);
  const double dsw = delta_sw(SubstrateStack(cplx(4.0, 0.0), base.stack.h), ctx);
  for (const double td : {0.001, 0.01, 0.1}) {
    const RefPoint rp = reference_point(0.35, 4.0, td, 0.0);
    const MatrixXcd r_tot = rp.ops.r + rp.ops.r_ohm;
    const BoundResult res = efficiency_ub_resonant(rp.ops.r_r, r_tot, rp.ops.x);
    const BoundResult nonres = efficiency_ub_nonresonant(rp.ops.r_r, r_tot);
    ck.require(res.certified && nonres.certified, "uncertified at tan_delta " + num(td));
    out.res_vs_nonres.emplace_back(res.value, nonres.value);
    out.collapse_diel.push_back((power_report(rp.ops, res.current).delta - dsw) / td);
    const MatrixXcd f_rows = farfield_rows(rp.basis, rp.stack, ctx, 0.0, 0.0);
    const BoundResult gain = gain_ub(f_rows, r_tot, rp.ops.x, true, &rp.ops.r_r);
    ck.require(gain.certified, "gain bound uncertified at tan_delta " + num(td));
    out.directivity.push_back(gain.directivity);
  }
  return out;
}

static double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo - 1.0;
}

static void c6_c7_c8() {
  static MidSizeResults mid;  // filled under criterion 6, reused by 7 and 8
  criterion(6, "ordering and invariance of the bounds", 0.0, [](Checker& ck) {
    mid = mid_size_study(ck);
    for (std::size_t i = 1; i < mid.eta_ohmic.size(); ++i)
      ck.require(mid.eta_ohmic[i] <= mid.eta_ohmic[i - 1] * (1.0 + 1e-12),
                 "eta_ub not non-increasing in r_s at step " + std::to_string(i));
    for (const auto& [res, nonres] : mid.res_vs_nonres)
      ck.require(res <= nonres * (1.0 + 1e-9),
                 "resonant bound " + num(res) + " exceeds nonresonant " + num(nonres));
    const double drift = std::abs(mid.eta_pin_a - mid.eta_pin_b) / mid.eta_pin_a;
    ck.require(drift <= 1e-10, "delivered-power drift " + num(drift) + " > 1e-10");
    return "eta_ub(r_s) = {" + num(mid.eta_ohmic[0]) + ", " + num(mid.eta_ohmic[1]) + ", " +
           num(mid.eta_ohmic[2]) + "}, power drift " + num(drift);
  });
  criterion(7, "loss-normalization collapse at size 0.35", 0.0, [](Checker& ck) {
    const double ohmic = spread(mid.delta_rho_norm);
    const double diel = spread(mid.collapse_diel);
    ck.require(!mid.delta_rho_norm.empty() && !mid.collapse_diel.empty(),
               "criterion 6 setup failed");
    ck.require(ohmic <= 0.05, "ohmic collapse spread " + num(ohmic) + " > 5%");
    ck.require(diel <= 0.10, "dielectric collapse spread " + num(diel) + " > 10%");
    return "delta_rho*Z0/r_s spread " + num(ohmic) + ", (delta-delta_sw)/tan_delta spread " +
           num(diel);
  });
  criterion(8, "directivity depends weakly on the loss tangent", 0.0, [](Checker& ck) {
    ck.require(!mid.directivity.empty(), "criterion 6 setup failed");
    const double d = spread(mid.directivity);
    ck.require(d <= 0.05, "directivity spread " + num(d) + " > 5%");
    return "D = {" + num(mid.directivity[0]) + ", " + num(mid.directivity[1]) + ", " +
           num(mid.directivity[2]) + "}, spread " + num(d);
  });
}

// --- criterion 9: power balance and reciprocity -----------------------------
static void c9() {
  criterion(9, "power balance and reciprocity on a 4x4-cell patch", 0.0, [](Checker& ck) {
    const double f = 3.0e9;
    const WaveContext ctx = WaveContext::from_frequency(f);
    const double lx = 0.5 * ctx.lambda0 / 2.0, ly = 0.77 * lx;
    const BasisSet basis = make_patch(4, 4, lx, ly);
    const SubstrateStack stack(cplx(4.0, 0.0), 0.05 * lx);
    const OperatorSet ops = assemble_operators(basis, stack, f, 0.0);

    const MatrixXcd diff = ops.r - ops.r_r;
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (diff + diff.adjoint()));
    const double floor = es.eigenvalues().minCoeff();
    const double r_norm = spectral_norm(ops.r);
    ck.require(floor >= -1e-10 * r_norm, "min eig(R - R_r) = " + num(floor) + " < -1e-10 * " +
                                             num(r_norm));
    const double recip =
        (ops.z - ops.z.transpose()).cwiseAbs().maxCoeff() / ops.z.cwiseAbs().maxCoeff();
    ck.require(recip < 1e-8, "reciprocity defect " + num(recip) + " >= 1e-8");
    return "min eig(R - R_r)/|R| = " + num(floor / r_norm) + ", reciprocity defect " + num(recip);
  });
}

// --- criterion 10: byte-identical sweeps across thread counts ---------------
static void c10() {
  criterion(10, "byte-identical sweep output across thread counts", 0.0, [](Checker& ck) {
    const fs::path dir = fs::temp_directory_path() / "patchbound-acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "sweep.cfg";
    std::ofstream(cfg_path) << "[geometry]\n"
                               "lx_over_lambda_eps = 0.3, 0.4\n"
                               "ly_over_lx = 0.77\n"
                               "h_over_lx = 0.05\n"
                               "nx = 3\n"
                               "ny = 2\n\n"
                               "[substrate]\n"
                               "eps_r_real = 4.0\n"
                               "tan_delta = 0.01, 0.1\n\n"
                               "[ohmic]\n"
                               "r_s = 0.377\n\n"
                               "[solve]\n"
                               "resonant = true\n"
                               "n_theta = 16\n"
                               "n_phi = 16\n";
    const SweepConfig cfg = parse_config(cfg_path);
    const auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::ostringstream os;
      os << in.rdbuf();
      return os.str();
    };
    RunOptions one;
    one.threads = 1;
    one.out_override = dir / "one.csv";
    RunOptions four;
    four.threads = 4;
    four.out_override = dir / "four.csv";
    const SweepSummary s1 = run_sweep(cfg, one);
    const SweepSummary s4 = run_sweep(cfg, four);
    ck.require(s1.n_failed == 0 && s4.n_failed == 0, "sweep reported failed points");
    const std::string b1 = slurp(s1.csv), b4 = slurp(s4.csv);
    ck.require(!b1.empty(), "empty sweep output");
    ck.require(b1 == b4, "outputs differ between 1 and 4 threads");
    fs::remove_all(dir);
    return std::to_string(s1.n_points) + " points, " + std::to_string(b1.size()) +
           " bytes, 1 vs 4 threads";
  });
}

int main() {
  c1();
  c2();
  c3();
  c4();
  c5();
  c6_c7_c8();
  c9();
  c10();
  std::printf("acceptance: %d/10 criteria passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
