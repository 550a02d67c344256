#include "patchbound/mom.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstring>
#include <stdexcept>
#include <thread>
#include <vector>

#include "patchbound/asymptotic_kernels.hpp"

namespace patchbound {
namespace {

using Eigen::MatrixXcd;

// ---------------------------------------------------------------------------
// Gauss-Legendre rule on [-1, 1] by Newton iteration on the Legendre
// recurrence (nodes symmetric, weights 2 / ((1 - x^2) P_n'(x)^2)).
struct GaussRule {
  std::vector<double> x, w;
};

GaussRule gauss_legendre(int n) {
  GaussRule rule;
  rule.x.assign(std::size_t(n), 0.0);
  rule.w.assign(std::size_t(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double root = std::cos(pi * (i + 0.75) / (n + 0.5));
    double deriv = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * root * p2 - j * p3) / (j + 1.0);
      }
      deriv = n * (root * p1 - p2) / (root * root - 1.0);
      const double step = p1 / deriv;
      root -= step;
      if (std::abs(step) < 1e-15) break;
    }
    rule.x[std::size_t(i)] = -root;
    rule.x[std::size_t(n - 1 - i)] = root;
    const double w = 2.0 / ((1.0 - root * root) * deriv * deriv);
    rule.w[std::size_t(i)] = w;
    rule.w[std::size_t(n - 1 - i)] = w;
  }
  return rule;
}

inline double sinc_r(double t) {
  return std::abs(t) < 1e-6 ? 1.0 - t * t / 6.0 : std::sin(t) / t;
}

// ---------------------------------------------------------------------------
// Offset bookkeeping. Anchors live on the half-cell grid: an x rooftop at
// edge (ix, iy) sits at half-cell (2 ix, 2 iy + 1), a y rooftop at
// (2 ix + 1, 2 iy). Entry values depend only on the anchor offset and the
// orientation pair, giving three small offset tables instead of N^2 integrals.
enum PairClass { kXX = 0, kYY = 1, kXY = 2 };

struct OffsetGrid {
  int ux0 = 0, nu = 0, vy0 = 0, nv = 0;  // offsets ux0 + 2 iu, vy0 + 2 iv
  std::size_t index(int ux, int vy) const {
    return std::size_t(vy - vy0) / 2 * std::size_t(nu) + std::size_t(ux - ux0) / 2;
  }
  std::size_t cells() const { return std::size_t(nu) * std::size_t(nv); }
};

struct GridSet {
  std::array<OffsetGrid, 3> grid;
  int umax = 0, vmax = 0;  // largest |ux|, |vy| over all classes
};

struct AnchorIndex {
  std::vector<int> hx, hy;  // half-cell anchor coordinates per basis
};

AnchorIndex half_cell_anchors(const BasisSet& basis) {
  AnchorIndex a;
  a.hx.reserve(basis.bases.size());
  a.hy.reserve(basis.bases.size());
  for (const Basis& b : basis.bases) {
    if (b.orient == Orientation::x) {
      a.hx.push_back(2 * b.ix);
      a.hy.push_back(2 * b.iy + 1);
    } else {
      a.hx.push_back(2 * b.ix + 1);
      a.hy.push_back(2 * b.iy);
    }
  }
  return a;
}

GridSet make_grids(const BasisSet& basis, const AnchorIndex& a) {
  const int n = basis.size();
  const int nx = basis.n_x;
  int xlo = 1 << 30, xhi = -(1 << 30), ylo = 1 << 30, yhi = -(1 << 30);
  int xlo2 = 1 << 30, xhi2 = -(1 << 30), ylo2 = 1 << 30, yhi2 = -(1 << 30);
  for (int i = 0; i < n; ++i) {
    if (i < nx) {
      xlo = std::min(xlo, a.hx[std::size_t(i)]);
      xhi = std::max(xhi, a.hx[std::size_t(i)]);
      ylo = std::min(ylo, a.hy[std::size_t(i)]);
      yhi = std::max(yhi, a.hy[std::size_t(i)]);
    } else {
      xlo2 = std::min(xlo2, a.hx[std::size_t(i)]);
      xhi2 = std::max(xhi2, a.hx[std::size_t(i)]);
      ylo2 = std::min(ylo2, a.hy[std::size_t(i)]);
      yhi2 = std::max(yhi2, a.hy[std::size_t(i)]);
    }
  }
  GridSet g;
  const auto span = [](int lo, int hi, OffsetGrid& grid, bool second_axis) {
    const int d0 = lo - hi, d1 = hi - lo;  // inclusive offset range, step 2
    if (second_axis) {
      grid.vy0 = d0;
      grid.nv = (d1 - d0) / 2 + 1;
    } else {
      grid.ux0 = d0;
      grid.nu = (d1 - d0) / 2 + 1;
    }
  };
  const bool has_x = nx > 0, has_y = basis.n_y > 0;
  if (has_x) {
    span(xlo, xhi, g.grid[kXX], false);
    span(ylo, yhi, g.grid[kXX], true);
  } else {
    g.grid[kXX] = OffsetGrid{0, 1, 0, 1};
  }
  if (has_y) {
    span(xlo2, xhi2, g.grid[kYY], false);
    span(ylo2, yhi2, g.grid[kYY], true);
  } else {
    g.grid[kYY] = OffsetGrid{0, 1, 0, 1};
  }
  if (has_x && has_y) {
    g.grid[kXY].ux0 = xlo - xhi2;
    g.grid[kXY].nu = (xhi - xlo2 - (xlo - xhi2)) / 2 + 1;
    g.grid[kXY].vy0 = ylo - yhi2;
    g.grid[kXY].nv = (yhi - ylo2 - (ylo - yhi2)) / 2 + 1;
  } else {
    g.grid[kXY] = OffsetGrid{1, 1, 1, 1};
  }
  for (const OffsetGrid& og : g.grid) {
    g.umax = std::max({g.umax, std::abs(og.ux0), std::abs(og.ux0 + 2 * (og.nu - 1))});
    g.vmax = std::max({g.vmax, std::abs(og.vy0), std::abs(og.vy0 + 2 * (og.nv - 1))});
  }
  return g;
}

// ---------------------------------------------------------------------------
// Angular stage. For one radial wavenumber the dyad splits into longitudinal
// and transverse projectors, so the azimuthal integral of
// spectrum_m(-k) . proj(alpha) . spectrum_n(k) reduces, per orientation pair
// and anchor offset, to a real cosine sum: the full circle folds onto
// [0, pi) because the weights are pi-periodic and the phase conjugates.
struct AngularScratch {
  std::array<std::vector<double>, 3> tm, te;
  std::vector<cplx> px, py;
  std::vector<double> xr_tm, xi_tm, xr_te, xi_te;

  explicit AngularScratch(const GridSet& g) {
    int numax = 0;
    for (int c = 0; c < 3; ++c) {
      tm[std::size_t(c)].assign(g.grid[std::size_t(c)].cells(), 0.0);
      te[std::size_t(c)].assign(g.grid[std::size_t(c)].cells(), 0.0);
      numax = std::max(numax, g.grid[std::size_t(c)].nu);
    }
    px.assign(std::size_t(2 * g.umax + 1), cplx(0.0, 0.0));
    py.assign(std::size_t(2 * g.vmax + 1), cplx(0.0, 0.0));
    xr_tm.assign(std::size_t(numax), 0.0);
    xi_tm.assign(std::size_t(numax), 0.0);
    xr_te.assign(std::size_t(numax), 0.0);
    xi_te.assign(std::size_t(numax), 0.0);
  }
};

int angular_count(double k_rho, double reff) {
  return int(std::ceil(0.5 * k_rho * reff)) + 24;
}

// Fills scratch.tm / scratch.te (pure angular sums, measure excluded; the
// caller multiplies 2 pi / m together with the radial weight).
void angular_pass(double k_rho, double dx, double dy, double reff, const GridSet& grids,
                  AngularScratch& s) {
  for (int c = 0; c < 3; ++c) {
    std::fill(s.tm[std::size_t(c)].begin(), s.tm[std::size_t(c)].end(), 0.0);
    std::fill(s.te[std::size_t(c)].begin(), s.te[std::size_t(c)].end(), 0.0);
  }
  const int m = angular_count(k_rho, reff);
  const int umax = (int(s.px.size()) - 1) / 2, vmax = (int(s.py.size()) - 1) / 2;
  for (int i = 0; i < m; ++i) {
    const double alpha = pi * i / m;
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    const double kx = k_rho * ca, ky = k_rho * sa;
    const double sl = sinc_r(0.5 * kx * dx), st = sinc_r(0.5 * ky * dy);
    const double sx = dx * dy * sl * sl * st;  // x-oriented rooftop shape
    const double sy = dx * dy * st * st * sl;  // y-oriented rooftop shape
    const double wtm[3] = {sx * sx * ca * ca, sy * sy * sa * sa, sx * sy * ca * sa};
    const double wte[3] = {sx * sx * sa * sa, sy * sy * ca * ca, -sx * sy * ca * sa};
    // Half-cell phase powers exp(j k . anchor-offset / 2).
    const cplx bx = std::polar(1.0, 0.5 * kx * dx), by = std::polar(1.0, 0.5 * ky * dy);
    s.px[std::size_t(umax)] = cplx(1.0, 0.0);
    for (int u = 1; u <= umax; ++u) {
      s.px[std::size_t(umax + u)] = s.px[std::size_t(umax + u - 1)] * bx;
      s.px[std::size_t(umax - u)] = std::conj(s.px[std::size_t(umax + u)]);
    }
    s.py[std::size_t(vmax)] = cplx(1.0, 0.0);
    for (int v = 1; v <= vmax; ++v) {
      s.py[std::size_t(vmax + v)] = s.py[std::size_t(vmax + v - 1)] * by;
      s.py[std::size_t(vmax - v)] = std::conj(s.py[std::size_t(vmax + v)]);
    }
    for (int c = 0; c < 3; ++c) {
      const OffsetGrid& og = grids.grid[std::size_t(c)];
      for (int iu = 0; iu < og.nu; ++iu) {
        const cplx p = s.px[std::size_t(og.ux0 + 2 * iu + umax)];
        s.xr_tm[std::size_t(iu)] = wtm[c] * p.real();
        s.xi_tm[std::size_t(iu)] = wtm[c] * p.imag();
        s.xr_te[std::size_t(iu)] = wte[c] * p.real();
        s.xi_te[std::size_t(iu)] = wte[c] * p.imag();
      }
      double* tmt = s.tm[std::size_t(c)].data();
      double* tet = s.te[std::size_t(c)].data();
      for (int iv = 0; iv < og.nv; ++iv) {
        const cplx q = s.py[std::size_t(og.vy0 + 2 * iv + vmax)];
        const double yr = q.real(), yi = q.imag();
        double* tmrow = tmt + std::size_t(iv) * std::size_t(og.nu);
        double* terow = tet + std::size_t(iv) * std::size_t(og.nu);
        for (int iu = 0; iu < og.nu; ++iu) {
          tmrow[iu] += s.xr_tm[std::size_t(iu)] * yr - s.xi_tm[std::size_t(iu)] * yi;
          terow[iu] += s.xr_te[std::size_t(iu)] * yr - s.xi_te[std::size_t(iu)] * yi;
        }
      }
    }
  }
}

// Complex-wavenumber variant used only at pole locations: the fold onto the
// half circle keeps both circulation directions, P and 1/P.
struct PoleTables {
  std::array<std::vector<cplx>, 3> val;  // polarization-projected angular sums
};

PoleTables angular_pass_at_pole(cplx k_rho, bool te_pole, double dx, double dy, double reff,
                                const GridSet& grids) {
  PoleTables out;
  for (int c = 0; c < 3; ++c) out.val[std::size_t(c)].assign(grids.grid[std::size_t(c)].cells(), cplx(0.0, 0.0));
  const int m = angular_count(std::abs(k_rho), reff);
  const double meas = pi / m;  // half circle; both directions added explicitly
  const int umax = grids.umax, vmax = grids.vmax;
  std::vector<cplx> px(std::size_t(2 * umax + 1)), py(std::size_t(2 * vmax + 1));
  for (int i = 0; i < m; ++i) {
    const double alpha = pi * i / m;
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    const cplx kx = k_rho * ca, ky = k_rho * sa;
    const cplx slc = sinc_c(0.5 * kx * dx), stc = sinc_c(0.5 * ky * dy);
    const cplx sx = dx * dy * slc * slc * stc;
    const cplx sy = dx * dy * stc * stc * slc;
    cplx wpol[3];
    if (te_pole) {
      wpol[0] = sx * sx * (sa * sa);
      wpol[1] = sy * sy * (ca * ca);
      wpol[2] = -sx * sy * (ca * sa);
    } else {
      wpol[0] = sx * sx * (ca * ca);
      wpol[1] = sy * sy * (sa * sa);
      wpol[2] = sx * sy * (ca * sa);
    }
    const cplx bx = std::exp(j1i * (0.5 * kx * dx)), by = std::exp(j1i * (0.5 * ky * dy));
    px[std::size_t(umax)] = cplx(1.0, 0.0);
    for (int u = 1; u <= umax; ++u) {
      px[std::size_t(umax + u)] = px[std::size_t(umax + u - 1)] * bx;
      px[std::size_t(umax - u)] = cplx(1.0, 0.0) / px[std::size_t(umax + u)];
    }
    py[std::size_t(vmax)] = cplx(1.0, 0.0);
    for (int v = 1; v <= vmax; ++v) {
      py[std::size_t(vmax + v)] = py[std::size_t(vmax + v - 1)] * by;
      py[std::size_t(vmax - v)] = cplx(1.0, 0.0) / py[std::size_t(vmax + v)];
    }
    for (int c = 0; c < 3; ++c) {
      const OffsetGrid& og = grids.grid[std::size_t(c)];
      for (int iv = 0; iv < og.nv; ++iv) {
        const cplx qy = py[std::size_t(og.vy0 + 2 * iv + vmax)];
        for (int iu = 0; iu < og.nu; ++iu) {
          const cplx qx = px[std::size_t(og.ux0 + 2 * iu + umax)];
          const cplx phase = qx * qy;
          out.val[std::size_t(c)][og.index(og.ux0 + 2 * iu, og.vy0 + 2 * iv)] +=
              meas * wpol[c] * (phase + cplx(1.0, 0.0) / phase);
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Radial pipeline.
enum class Region { kRadiatingDisk, kTrappedAnnulus, kTailResidual, kAsymptoticDisk };

struct Panel {
  Region region;
  double a = 0.0, b = 0.0;  // bounds in the region's own variable
};

struct PoleData {
  cplx k_rho;                           // pole location
  cplx c_scale;                         // residue * k_rho
  std::array<std::vector<cplx>, 3> c;   // subtraction tables c_scale * angular
};

struct ClassTables {
  std::array<std::vector<cplx>, 3> z;
  explicit ClassTables(const GridSet& g) {
    for (int c = 0; c < 3; ++c) z[std::size_t(c)].assign(g.grid[std::size_t(c)].cells(), cplx(0.0, 0.0));
  }
  void add(const ClassTables& other) {
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < z[std::size_t(c)].size(); ++i)
        z[std::size_t(c)][i] += other.z[std::size_t(c)][i];
  }
  double abs_sum() const {
    double s = 0.0;
    for (int c = 0; c < 3; ++c)
      for (const cplx& v : z[std::size_t(c)]) s += std::abs(v);
    return s;
  }
};

struct RadialSetup {
  const BasisSet* basis = nullptr;
  const SubstrateStack* stack = nullptr;
  const WaveContext* ctx = nullptr;
  const GridSet* grids = nullptr;
  const GaussRule* rule = nullptr;
  const std::vector<PoleData>* poles = nullptr;
  double reff = 0.0, k = 0.0, kappa_a = 0.0;
  bool subtract_poles = false;
};

void process_panel(const RadialSetup& su, const Panel& panel, ClassTables& out,
                   AngularScratch& scratch) {
  const Mesh& mesh = su.basis->mesh;
  const int order = int(su.rule->x.size());
  for (int q = 0; q < order; ++q) {
    const double t = 0.5 * (panel.a + panel.b) + 0.5 * (panel.b - panel.a) * su.rule->x[std::size_t(q)];
    const double wq = 0.5 * (panel.b - panel.a) * su.rule->w[std::size_t(q)];
    double k_rho = 0.0, fac = 0.0;
    switch (panel.region) {
      case Region::kRadiatingDisk:  // k_rho = k sin t, measure k_rho dk_rho
        k_rho = su.k * std::sin(t);
        fac = wq * k_rho * su.k * std::cos(t);
        break;
      case Region::kTrappedAnnulus:  // s = sqrt(k_rho^2 - k^2), k_rho dk_rho = s ds
        k_rho = std::hypot(su.k, t);
        fac = wq * t;
        break;
      default:
        k_rho = t;
        fac = wq * k_rho;
        break;
    }
    cplx ztm, zte;
    switch (panel.region) {
      case Region::kRadiatingDisk:
      case Region::kTrappedAnnulus:
        ztm = tm_impedance(cplx(k_rho, 0.0), *su.stack, *su.ctx);
        zte = te_impedance(cplx(k_rho, 0.0), *su.stack, *su.ctx);
        break;
      case Region::kTailResidual:
        ztm = tm_impedance(cplx(k_rho, 0.0), *su.stack, *su.ctx) -
              tm_impedance_tail(cplx(k_rho, 0.0), *su.stack, *su.ctx);
        zte = te_impedance(cplx(k_rho, 0.0), *su.stack, *su.ctx) -
              te_impedance_tail(cplx(k_rho, 0.0), *su.ctx);
        break;
      case Region::kAsymptoticDisk:  // numeric complement, subtracted
        ztm = -tm_impedance_tail(cplx(k_rho, 0.0), *su.stack, *su.ctx);
        zte = -te_impedance_tail(cplx(k_rho, 0.0), *su.ctx);
        break;
    }
    angular_pass(k_rho, mesh.dx, mesh.dy, su.reff, *su.grids, scratch);
    const double meas = 2.0 * pi / angular_count(k_rho, su.reff);
    const cplx ctm = fac * meas * ztm, cte = fac * meas * zte;
    for (int c = 0; c < 3; ++c) {
      cplx* zt = out.z[std::size_t(c)].data();
      const double* tmt = scratch.tm[std::size_t(c)].data();
      const double* tet = scratch.te[std::size_t(c)].data();
      const std::size_t cells = out.z[std::size_t(c)].size();
      for (std::size_t i = 0; i < cells; ++i) zt[i] += ctm * tmt[i] + cte * tet[i];
    }
    if (panel.region == Region::kTrappedAnnulus && su.subtract_poles) {
      for (const PoleData& p : *su.poles) {
        const cplx factor = fac * 2.0 / (cplx(k_rho * k_rho, 0.0) - p.k_rho * p.k_rho);
        for (int c = 0; c < 3; ++c) {
          cplx* zt = out.z[std::size_t(c)].data();
          const cplx* ct = p.c[std::size_t(c)].data();
          const std::size_t cells = out.z[std::size_t(c)].size();
          for (std::size_t i = 0; i < cells; ++i) zt[i] -= factor * ct[i];
        }
      }
    }
  }
}

// Closed-form integral of the asymptotic dyad over the whole plane, expressed
// through separable correlation integrals of the rooftop factor profiles
// against the 1/rho (longitudinal) and rho rho^T / rho^3 (transverse) kernels.
struct AsymptoteClosedForm {
  std::array<std::vector<cplx>, 3> z;
};

AsymptoteClosedForm closed_form_asymptote(const BasisSet& basis, const SubstrateStack& stack,
                                          const WaveContext& ctx, const GridSet& grids) {
  const double dx = basis.mesh.dx, dy = basis.mesh.dy;
  using FP = FactorProfile;
  struct Pair {
    CorrelationPoly cx, cy;
    PlanarKernel kernel;
  };
  const auto tm_pair = [&](int cls) -> Pair {
    switch (cls) {
      case kXX:
        return {profile_correlation(FP::kDivAlong, FP::kDivAlong, dx),
                profile_correlation(FP::kCurrentAcross, FP::kCurrentAcross, dy),
                PlanarKernel::kInvRho};
      case kYY:
        return {profile_correlation(FP::kCurrentAcross, FP::kCurrentAcross, dx),
                profile_correlation(FP::kDivAlong, FP::kDivAlong, dy), PlanarKernel::kInvRho};
      default:
        return {profile_correlation(FP::kDivAlong, FP::kCurrentAcross, dx),
                profile_correlation(FP::kCurrentAcross, FP::kDivAlong, dy),
                PlanarKernel::kInvRho};
    }
  };
  const auto te_pair = [&](int cls) -> Pair {
    switch (cls) {
      case kXX:
        return {profile_correlation(FP::kCurrentAlong, FP::kCurrentAlong, dx),
                profile_correlation(FP::kCurrentAcross, FP::kCurrentAcross, dy),
                PlanarKernel::kUURho3};
      case kYY:
        return {profile_correlation(FP::kCurrentAcross, FP::kCurrentAcross, dx),
                profile_correlation(FP::kCurrentAlong, FP::kCurrentAlong, dy),
                PlanarKernel::kVVRho3};
      default:
        return {profile_correlation(FP::kCurrentAlong, FP::kCurrentAcross, dx),
                profile_correlation(FP::kCurrentAcross, FP::kCurrentAlong, dy),
                PlanarKernel::kUVRho3};
    }
  };
  const cplx tm_coef = -j1i / (ctx.omega * eps0 * (stack.eps_r + 1.0)) / (2.0 * pi);
  const cplx te_coef = j1i * ctx.omega * mu0 / (4.0 * pi);
  AsymptoteClosedForm out;
  for (int c = 0; c < 3; ++c) {
    const OffsetGrid& og = grids.grid[std::size_t(c)];
    out.z[std::size_t(c)].assign(og.cells(), cplx(0.0, 0.0));
    const Pair tm = tm_pair(c), te = te_pair(c);
    for (int iv = 0; iv < og.nv; ++iv) {
      for (int iu = 0; iu < og.nu; ++iu) {
        const int ux = og.ux0 + 2 * iu, vy = og.vy0 + 2 * iv;
        const double dcx = 0.5 * ux * dx, dcy = 0.5 * vy * dy;
        out.z[std::size_t(c)][og.index(ux, vy)] =
            tm_coef * correlation_integral(tm.cx, tm.cy, tm.kernel, dcx, dcy) +
            te_coef * correlation_integral(te.cx, te.cy, te.kernel, dcx, dcy);
      }
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
MatrixXcd assemble_impedance(const BasisSet& basis, const SubstrateStack& stack,
                             const WaveContext& ctx, const AssemblyOptions& opts,
                             QuadratureInfo* info) {
  if (basis.size() == 0) throw std::invalid_argument("[ERROR] assemble_impedance(): empty basis.");
  if (opts.gl_order < 2 || opts.kmax_factor <= 0.0 || opts.phase_budget <= 0.0) {
    throw std::invalid_argument("[ERROR] assemble_impedance(): bad quadrature options.");
  }
  const Mesh& mesh = basis.mesh;
  const double k = ctx.k0;
  const double reff = std::hypot(mesh.nx * mesh.dx, mesh.ny * mesh.dy) + 2.0 * (mesh.dx + mesh.dy);
  const double kappa_a = std::max(std::sqrt(std::max(stack.eps_r.real(), 1.0)), 1.0) * 1.05 * k;
  const double k_max = opts.kmax_factor * pi / std::min(mesh.dx, mesh.dy);
  if (k_max <= kappa_a) {
    throw std::invalid_argument(
        "[ERROR] assemble_impedance(): truncation radius below the asymptotic split; "
        "increase kmax_factor.");
  }

  const AnchorIndex anchors = half_cell_anchors(basis);
  const GridSet grids = make_grids(basis, anchors);
  const GaussRule rule = gauss_legendre(opts.gl_order);

  // Surface-wave poles: subtract them analytically, or refuse when a lossless
  // pole would sit on the integration path.
  std::vector<PoleData> poles;
  {
    const std::vector<SurfaceWavePole> raw = find_surface_wave_poles(stack, ctx);
    if (!raw.empty() && !opts.extract_poles && stack.lossless()) {
      throw std::runtime_error(
          "[ERROR] assemble_impedance(): lossless surface-wave pole on the integration path; "
          "enable pole extraction.");
    }
    if (opts.extract_poles) {
      for (const SurfaceWavePole& p : raw) {
        PoleData pd;
        pd.k_rho = p.k_rho;
        pd.c_scale = p.residue * p.k_rho;
        const PoleTables ang =
            angular_pass_at_pole(p.k_rho, p.te, mesh.dx, mesh.dy, reff, grids);
        for (int c = 0; c < 3; ++c) {
          pd.c[std::size_t(c)].resize(ang.val[std::size_t(c)].size());
          for (std::size_t i = 0; i < ang.val[std::size_t(c)].size(); ++i)
            pd.c[std::size_t(c)][i] = pd.c_scale * ang.val[std::size_t(c)][i];
        }
        poles.push_back(std::move(pd));
      }
    }
  }

  // Panel layout, sized by the worst-case phase swing per panel.
  const auto panel_count = [&](double range) {
    return int(std::ceil(range * reff / opts.phase_budget)) + opts.min_panels;
  };
  std::vector<Panel> panels;
  QuadratureInfo qi;
  qi.k_max = k_max;
  qi.kappa_a = kappa_a;
  qi.n_poles = int(poles.size());
  const auto add_region = [&](Region region, double a, double b, int n, int& counter) {
    for (int i = 0; i < n; ++i) {
      panels.push_back(Panel{region, a + (b - a) * i / n, a + (b - a) * (i + 1) / n});
    }
    counter = n;
  };
  {
    // Radiating disk in t (k_rho = k sin t): a surface-wave pole just past the
    // branch point appears as a narrow grazing feature near t = pi/2, so the
    // last panel is graded geometrically into the endpoint.
    const int n = panel_count(k);
    constexpr int kGradeLevels = 14;
    for (int i = 0; i + 1 < n; ++i) {
      panels.push_back(Panel{Region::kRadiatingDisk, 0.5 * pi * i / n, 0.5 * pi * (i + 1) / n});
    }
    const double w0 = 0.5 * pi / n;
    for (int l = 1; l <= kGradeLevels; ++l) {
      panels.push_back(Panel{Region::kRadiatingDisk, 0.5 * pi - w0 * std::pow(0.5, l - 1),
                             0.5 * pi - w0 * std::pow(0.5, l)});
    }
    panels.push_back(
        Panel{Region::kRadiatingDisk, 0.5 * pi - w0 * std::pow(0.5, kGradeLevels), 0.5 * pi});
    qi.panels_radiating = n + kGradeLevels;
  }
  const double s_max = std::sqrt(kappa_a * kappa_a - k * k);
  add_region(Region::kTrappedAnnulus, 0.0, s_max, panel_count(s_max), qi.panels_trapped);
  add_region(Region::kTailResidual, kappa_a, k_max, panel_count(k_max - kappa_a), qi.panels_tail);
  add_region(Region::kAsymptoticDisk, 0.0, kappa_a, panel_count(kappa_a), qi.panels_asymptotic);

  RadialSetup setup;
  setup.basis = &basis;
  setup.stack = &stack;
  setup.ctx = &ctx;
  setup.grids = &grids;
  setup.rule = &rule;
  setup.poles = &poles;
  setup.reff = reff;
  setup.k = k;
  setup.kappa_a = kappa_a;
  setup.subtract_poles = !poles.empty();

  // Each panel is integrated independently and reduced in panel order, so the
  // result is bit-identical for every worker count.
  std::vector<ClassTables> partial(panels.size(), ClassTables(grids));
  const int n_workers = std::max(1, opts.threads);
  std::atomic<std::size_t> cursor{0};
  const auto worker = [&]() {
    AngularScratch scratch(grids);
    for (;;) {
      const std::size_t ip = cursor.fetch_add(1);
      if (ip >= panels.size()) break;
      process_panel(setup, panels[ip], partial[ip], scratch);
    }
  };
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(n_workers - 1));
    for (int i = 0; i < n_workers - 1; ++i) pool.emplace_back(worker);
    worker();
    for (std::thread& th : pool) th.join();
  }

  ClassTables total(grids);
  for (const ClassTables& p : partial) total.add(p);

  // Convergence bookkeeping: share of the outermost tail panel.
  {
    const std::size_t last_tail =
        std::size_t(qi.panels_radiating + qi.panels_trapped + qi.panels_tail) - 1;
    const double total_mag = total.abs_sum();
    qi.tail_fraction = total_mag > 0.0 ? partial[last_tail].abs_sum() / total_mag : 0.0;
    if (qi.tail_fraction > opts.tail_abort) {
      throw std::runtime_error(
          "[ERROR] assemble_impedance(): spectral tail not converged (outermost panel carries " +
          std::to_string(qi.tail_fraction) + " of the integral); increase kmax_factor.");
    }
  }

  // Pole ring add-back: the exact integral of each subtracted rational term.
  for (const PoleData& p : poles) {
    const cplx kp2 = p.k_rho * p.k_rho;
    const cplx ring = std::log(cplx(kappa_a * kappa_a, 0.0) - kp2) -
                      std::log(cplx(k * k, 0.0) - kp2);
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < total.z[std::size_t(c)].size(); ++i)
        total.z[std::size_t(c)][i] += ring * p.c[std::size_t(c)][i];
  }

  // Spectral prefactor, then the closed-form asymptote handled in space.
  const AsymptoteClosedForm cf = closed_form_asymptote(basis, stack, ctx, grids);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < total.z[std::size_t(c)].size(); ++i)
      total.z[std::size_t(c)][i] =
          total.z[std::size_t(c)][i] / (4.0 * pi * pi) + cf.z[std::size_t(c)][i];

  // Scatter the offset tables into the full matrix.
  const int n = basis.size();
  MatrixXcd z(n, n);
  for (int row = 0; row < n; ++row) {
    const bool row_x = basis.bases[std::size_t(row)].orient == Orientation::x;
    for (int col = 0; col < n; ++col) {
      const bool col_x = basis.bases[std::size_t(col)].orient == Orientation::x;
      int cls, ux, vy;
      if (row_x && col_x) {
        cls = kXX;
        ux = anchors.hx[std::size_t(row)] - anchors.hx[std::size_t(col)];
        vy = anchors.hy[std::size_t(row)] - anchors.hy[std::size_t(col)];
      } else if (!row_x && !col_x) {
        cls = kYY;
        ux = anchors.hx[std::size_t(row)] - anchors.hx[std::size_t(col)];
        vy = anchors.hy[std::size_t(row)] - anchors.hy[std::size_t(col)];
      } else {
        cls = kXY;
        const int xi = row_x ? row : col, yi = row_x ? col : row;
        ux = anchors.hx[std::size_t(xi)] - anchors.hx[std::size_t(yi)];
        vy = anchors.hy[std::size_t(xi)] - anchors.hy[std::size_t(yi)];
      }
      z(row, col) = total.z[std::size_t(cls)][grids.grid[std::size_t(cls)].index(ux, vy)];
    }
  }
  qi.n_theta = opts.n_theta;
  qi.n_phi = opts.n_phi;
  if (info != nullptr) *info = qi;
  return z;
}

void split_rx(const MatrixXcd& z, MatrixXcd& r, MatrixXcd& x) {
  if (z.rows() != z.cols()) throw std::invalid_argument("[ERROR] split_rx(): Z must be square.");
  r = 0.5 * (z + z.adjoint());
  x = (z - z.adjoint()) / cplx(0.0, 2.0);
}

MatrixXcd ohmic_gram(const BasisSet& basis, double r_s) {
  if (r_s < 0.0) throw std::invalid_argument("[ERROR] ohmic_gram(): R_s must be >= 0.");
  const int n = basis.size();
  const double cell = basis.mesh.dx * basis.mesh.dy;
  MatrixXcd g = MatrixXcd::Zero(n, n);
  if (r_s == 0.0) return g;
  for (int m = 0; m < n; ++m) {
    const Basis& bm = basis.bases[std::size_t(m)];
    g(m, m) = r_s * (2.0 / 3.0) * cell;
    for (int q = m + 1; q < n; ++q) {
      const Basis& bq = basis.bases[std::size_t(q)];
      if (bm.orient != bq.orient) continue;  // orthogonal current directions
      const bool along_x = bm.orient == Orientation::x;
      const int d_along = along_x ? bq.ix - bm.ix : bq.iy - bm.iy;
      const int d_trans = along_x ? bq.iy - bm.iy : bq.ix - bm.ix;
      if (d_trans == 0 && std::abs(d_along) == 1) {
        g(m, q) = g(q, m) = r_s * cell / 6.0;  // one shared cell, triangle overlap
      }
    }
  }
  return g;
}

MatrixXcd farfield_rows(const BasisSet& basis, const SubstrateStack& stack,
                        const WaveContext& ctx, double theta, double phi) {
  const double kt = ctx.k0 * std::sin(theta);
  const double kx = kt * std::cos(phi), ky = kt * std::sin(phi);
  const FarField unit_x = hed_farfield(theta, phi, Orientation::x, cplx(1.0, 0.0), stack, ctx);
  const FarField unit_y = hed_farfield(theta, phi, Orientation::y, cplx(1.0, 0.0), stack, ctx);
  const int n = basis.size();
  MatrixXcd f(2, n);
  for (int i = 0; i < n; ++i) {
    const Basis& b = basis.bases[std::size_t(i)];
    const cplx moment = basis_spectrum(b, basis.mesh, cplx(-kx, 0.0), cplx(-ky, 0.0));
    const FarField& u = b.orient == Orientation::x ? unit_x : unit_y;
    f(0, i) = u.f_theta * moment;
    f(1, i) = u.f_phi * moment;
  }
  return f;
}

MatrixXcd radiation_operator(const BasisSet& basis, const SubstrateStack& stack,
                             const WaveContext& ctx, int n_theta, int n_phi) {
  if (n_theta < 2 || n_phi < 2 || n_phi % 2 != 0) {
    throw std::invalid_argument(
        "[ERROR] radiation_operator(): need n_theta >= 2 and even n_phi >= 2.");
  }
  const GaussRule rule = gauss_legendre(n_theta);
  const int n = basis.size();
  MatrixXcd fs(2 * n_theta * n_phi, n);
  int row = 0;
  for (int it = 0; it < n_theta; ++it) {
    const double u = 0.5 * (rule.x[std::size_t(it)] + 1.0);  // cos(theta) on (0, 1)
    const double wu = 0.5 * rule.w[std::size_t(it)];
    const double theta = std::acos(u);
    for (int ip = 0; ip < n_phi; ++ip) {
      const double phi = 2.0 * pi * ip / n_phi;
      const double scale = std::sqrt(wu * (2.0 * pi / n_phi) / z0);
      const MatrixXcd f = farfield_rows(basis, stack, ctx, theta, phi);
      fs.row(row++) = scale * f.row(0);
      fs.row(row++) = scale * f.row(1);
    }
  }
  return fs;
}

OperatorSet assemble_operators(const BasisSet& basis, const SubstrateStack& stack, double f_hz,
                               double r_s, const AssemblyOptions& opts) {
  OperatorSet ops;
  ops.basis = basis;
  ops.stack = stack;
  ops.wave = WaveContext::from_frequency(f_hz);
  ops.r_s = r_s;
  ops.mesh_id = mesh_hash(basis.mesh);
  ops.z = assemble_impedance(basis, stack, ops.wave, opts, &ops.quad);
  split_rx(ops.z, ops.r, ops.x);
  ops.r_ohm = ohmic_gram(basis, r_s);
  ops.f_s = radiation_operator(basis, stack, ops.wave, opts.n_theta, opts.n_phi);
  ops.r_r = MatrixXcd(ops.f_s.adjoint() * ops.f_s);
  ops.quad.n_theta = opts.n_theta;
  ops.quad.n_phi = opts.n_phi;
  return ops;
}

PowerReport power_report(const OperatorSet& ops, const Eigen::VectorXcd& current) {
  if (current.size() != ops.z.rows()) {
    throw std::invalid_argument("[ERROR] power_report(): current length does not match N.");
  }
  const auto quad = [&](const MatrixXcd& m) {
    return 0.5 * (current.adjoint() * m * current).real()(0);
  };
  PowerReport rep;
  rep.p_ohmic = quad(ops.r_ohm);
  rep.p_delivered = quad(ops.r) + rep.p_ohmic;
  rep.p_radiated = quad(ops.r_r);
  rep.p_substrate = rep.p_delivered - rep.p_radiated - rep.p_ohmic;
  if (!(rep.p_radiated > 0.0)) {
    throw std::runtime_error(
        "[ERROR] power_report(): radiated power is not positive; efficiency undefined.");
  }
  rep.delta = (rep.p_delivered - rep.p_radiated) / rep.p_radiated;
  rep.delta_rho = rep.p_ohmic / rep.p_radiated;
  rep.eta = rep.p_radiated / rep.p_delivered;
  return rep;
}

std::uint64_t mesh_hash(const Mesh& mesh) {
  std::uint64_t h = 14695981039346656037ull;  // FNV-1a
  const auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  const auto mix_double = [&](double d) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(d));
    std::memcpy(&bits, &d, sizeof(bits));
    mix(bits);
  };
  mix(std::uint64_t(mesh.nx));
  mix(std::uint64_t(mesh.ny));
  mix_double(mesh.region.lx);
  mix_double(mesh.region.ly);
  for (std::uint8_t a : mesh.active) mix(a);
  return h;
}

}  // namespace patchbound
