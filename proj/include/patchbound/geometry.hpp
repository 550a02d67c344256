// Rectangular design region, cell masks, uniform mesh and rooftop basis set.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "patchbound/constants.hpp"

namespace patchbound {

// Rectangular design region on the top face of the substrate, corner at the
// origin, extents lx along x and ly along y (meters).
struct DesignRegion {
  double lx = 0.0;
  double ly = 0.0;
};

// Cell-grid mask selecting which mesh cells carry metal. Fractional mask
// parameters snap to the nearest cell boundary of the target grid.
class ShapeMask {
 public:
  enum class Kind { full, slot_loaded, h_shaped, custom };

  static ShapeMask full();
  // Rectangular slot of width `width_frac * lx` centered in x, cut from the
  // horizontal centerline toward the +y edge with depth `depth_frac * ly / 2`.
  static ShapeMask slot_loaded(double width_frac = 0.5, double depth_frac = 0.5);
  // H shape: full-width bars at both y ends; the middle `bridge_frac * ly`
  // band keeps only a centered bridge of width `waist_frac * lx`.
  static ShapeMask h_shaped(double waist_frac = 1.0 / 3.0, double bridge_frac = 1.0 / 3.0);
  // Text grid of '0'/'1' rows (whitespace-separated rows, top row = highest y).
  static ShapeMask custom_grid(std::string_view text);

  Kind kind() const { return kind_; }
  // Row-major active flags for an nx-by-ny cell grid (index iy * nx + ix).
  std::vector<std::uint8_t> apply(int nx, int ny) const;
  std::string describe() const;

 private:
  ShapeMask() = default;
  Kind kind_ = Kind::full;
  double width_frac_ = 0.5, depth_frac_ = 0.5;   // slot_loaded
  double waist_frac_ = 1.0 / 3.0, bridge_frac_ = 1.0 / 3.0;  // h_shaped
  std::vector<std::uint8_t> custom_;
  int custom_nx_ = 0, custom_ny_ = 0;
};

// Uniform rectangular mesh over the design region with a metal/no-metal flag
// per cell. Cell (ix, iy) spans [ix*dx, (ix+1)*dx] x [iy*dy, (iy+1)*dy].
struct Mesh {
  DesignRegion region;
  int nx = 0, ny = 0;
  double dx = 0.0, dy = 0.0;
  std::vector<std::uint8_t> active;
  int n_active = 0;

  bool cell_active(int ix, int iy) const {
    return ix >= 0 && ix < nx && iy >= 0 && iy < ny && active[std::size_t(iy) * nx + ix] != 0;
  }
};

enum class Orientation : std::uint8_t { x = 0, y = 1 };

// One rooftop function: unit peak surface-current density flowing along
// `orient`, triangular along the flow direction over the two cells sharing an
// interior edge, constant across it. (cx, cy) is the shared-edge midpoint.
struct Basis {
  Orientation orient;
  int ix = 0, iy = 0;  // edge anchor: x-rooftop between cells (ix-1,iy),(ix,iy); y analog
  double cx = 0.0, cy = 0.0;
};

struct BasisSet {
  Mesh mesh;
  std::vector<Basis> bases;
  int n_x = 0, n_y = 0;  // counts per orientation; x block precedes y block
  int size() const { return int(bases.size()); }
};

// Builds the mesh, applies the mask, and validates that the metal cell set is
// nonempty and 4-connected. Throws std::invalid_argument on bad input.
Mesh build_mesh(const DesignRegion& region, int nx, int ny, const ShapeMask& mask);

// One rooftop per interior shared edge of active cells; x-oriented bases in
// row-major edge order first, then y-oriented.
BasisSet build_basis(const Mesh& mesh);

// Closed-form 2-D Fourier transform of a rooftop at (kx, ky), convention
// psi~(k) = integral psi(r) exp(-j k.r) dA. Squared sinc along the current
// direction, sinc across it, times the shared-edge anchor phase. Value at
// k = 0 is the rooftop dipole moment dx*dy.
cplx basis_spectrum(const Basis& basis, const Mesh& mesh, cplx kx, cplx ky);

// Orientation shape factor without the anchor phase (real and even for real k).
cplx rooftop_shape(Orientation orient, const Mesh& mesh, cplx kx, cplx ky);

// sin(z)/z with a series branch near zero.
cplx sinc_c(cplx z);

}  // namespace patchbound
