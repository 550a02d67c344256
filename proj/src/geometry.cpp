#include "patchbound/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace patchbound {

namespace {

int snap(double frac, int n) {
  int b = int(std::lround(frac * n));
  return std::clamp(b, 0, n);
}

}  // namespace

ShapeMask ShapeMask::full() { return ShapeMask{}; }

ShapeMask ShapeMask::slot_loaded(double width_frac, double depth_frac) {
  if (!(width_frac > 0.0 && width_frac < 1.0) || !(depth_frac > 0.0 && depth_frac <= 1.0)) {
    throw std::invalid_argument(
        "[ERROR] ShapeMask::slot_loaded(): fractions must satisfy 0 < width < 1, 0 < depth <= 1.");
  }
  ShapeMask m;
  m.kind_ = Kind::slot_loaded;
  m.width_frac_ = width_frac;
  m.depth_frac_ = depth_frac;
  return m;
}

ShapeMask ShapeMask::h_shaped(double waist_frac, double bridge_frac) {
  if (!(waist_frac > 0.0 && waist_frac <= 1.0) || !(bridge_frac >= 0.0 && bridge_frac < 1.0)) {
    throw std::invalid_argument(
        "[ERROR] ShapeMask::h_shaped(): fractions must satisfy 0 < waist <= 1, 0 <= bridge < 1.");
  }
  ShapeMask m;
  m.kind_ = Kind::h_shaped;
  m.waist_frac_ = waist_frac;
  m.bridge_frac_ = bridge_frac;
  return m;
}

ShapeMask ShapeMask::custom_grid(std::string_view text) {
  std::vector<std::vector<std::uint8_t>> rows;
  std::string line;
  std::istringstream is{std::string(text)};
  while (is >> line) {
    std::vector<std::uint8_t> row;
    row.reserve(line.size());
    for (char c : line) {
      if (c == '0' || c == '1') {
        row.push_back(std::uint8_t(c - '0'));
      } else {
        throw std::invalid_argument("[ERROR] ShapeMask::custom_grid(): rows must contain only '0'/'1'.");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("[ERROR] ShapeMask::custom_grid(): ragged rows.");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) {
    throw std::invalid_argument("[ERROR] ShapeMask::custom_grid(): empty grid.");
  }
  ShapeMask m;
  m.kind_ = Kind::custom;
  m.custom_nx_ = int(rows.front().size());
  m.custom_ny_ = int(rows.size());
  m.custom_.resize(std::size_t(m.custom_nx_) * m.custom_ny_);
  // Text top row is the highest-y cell row.
  for (int iy = 0; iy < m.custom_ny_; ++iy) {
    for (int ix = 0; ix < m.custom_nx_; ++ix) {
      m.custom_[std::size_t(iy) * m.custom_nx_ + ix] = rows[std::size_t(m.custom_ny_ - 1 - iy)][std::size_t(ix)];
    }
  }
  return m;
}

std::vector<std::uint8_t> ShapeMask::apply(int nx, int ny) const {
  std::vector<std::uint8_t> a(std::size_t(nx) * ny, 1);
  switch (kind_) {
    case Kind::full:
      break;
    case Kind::slot_loaded: {
      const int x0 = snap(0.5 - 0.5 * width_frac_, nx);
      const int x1 = snap(0.5 + 0.5 * width_frac_, nx);
      const int y0 = snap(0.5, ny);
      const int y1 = snap(0.5 + 0.5 * depth_frac_, ny);
      for (int iy = y0; iy < y1; ++iy)
        for (int ix = x0; ix < x1; ++ix) a[std::size_t(iy) * nx + ix] = 0;
      break;
    }
    case Kind::h_shaped: {
      const int x0 = snap(0.5 - 0.5 * waist_frac_, nx);
      const int x1 = snap(0.5 + 0.5 * waist_frac_, nx);
      const int y0 = snap(0.5 - 0.5 * bridge_frac_, ny);
      const int y1 = snap(0.5 + 0.5 * bridge_frac_, ny);
      for (int iy = y0; iy < y1; ++iy)
        for (int ix = 0; ix < nx; ++ix)
          if (ix < x0 || ix >= x1) a[std::size_t(iy) * nx + ix] = 0;
      break;
    }
    case Kind::custom: {
      if (custom_nx_ != nx || custom_ny_ != ny) {
        throw std::invalid_argument(
            "[ERROR] ShapeMask::apply(): custom grid dimensions must match the mesh grid.");
      }
      a = custom_;
      break;
    }
  }
  return a;
}

std::string ShapeMask::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::full:
      os << "full";
      break;
    case Kind::slot_loaded:
      os << "slot(" << width_frac_ << "," << depth_frac_ << ")";
      break;
    case Kind::h_shaped:
      os << "h(" << waist_frac_ << "," << bridge_frac_ << ")";
      break;
    case Kind::custom:
      os << "custom(" << custom_nx_ << "x" << custom_ny_ << ")";
      break;
  }
  return os.str();
}

Mesh build_mesh(const DesignRegion& region, int nx, int ny, const ShapeMask& mask) {
  if (!(region.lx > 0.0) || !(region.ly > 0.0)) {
    throw std::invalid_argument("[ERROR] build_mesh(): design region extents must be positive.");
  }
  if (nx < 1 || ny < 1) {
    throw std::invalid_argument("[ERROR] build_mesh(): cell counts must be at least 1.");
  }
  Mesh mesh;
  mesh.region = region;
  mesh.nx = nx;
  mesh.ny = ny;
  mesh.dx = region.lx / nx;
  mesh.dy = region.ly / ny;
  mesh.active = mask.apply(nx, ny);
  mesh.n_active = int(std::count(mesh.active.begin(), mesh.active.end(), std::uint8_t(1)));
  if (mesh.n_active == 0) {
    throw std::invalid_argument("[ERROR] build_mesh(): mask removes every cell.");
  }

  // 4-connectivity over active cells.
  std::vector<std::uint8_t> seen(mesh.active.size(), 0);
  std::queue<int> q;
  int start = int(std::find(mesh.active.begin(), mesh.active.end(), std::uint8_t(1)) - mesh.active.begin());
  q.push(start);
  seen[std::size_t(start)] = 1;
  int reached = 0;
  while (!q.empty()) {
    int c = q.front();
    q.pop();
    ++reached;
    int ix = c % nx, iy = c / nx;
    const int nb[4][2] = {{ix - 1, iy}, {ix + 1, iy}, {ix, iy - 1}, {ix, iy + 1}};
    for (auto& n : nb) {
      if (n[0] < 0 || n[0] >= nx || n[1] < 0 || n[1] >= ny) continue;
      int idx = n[1] * nx + n[0];
      if (mesh.active[std::size_t(idx)] && !seen[std::size_t(idx)]) {
        seen[std::size_t(idx)] = 1;
        q.push(idx);
      }
    }
  }
  if (reached != mesh.n_active) {
    throw std::invalid_argument("[ERROR] build_mesh(): active cell set is not 4-connected.");
  }
  return mesh;
}

BasisSet build_basis(const Mesh& mesh) {
  BasisSet set;
  set.mesh = mesh;
  for (int iy = 0; iy < mesh.ny; ++iy) {
    for (int ix = 1; ix < mesh.nx; ++ix) {
      if (mesh.cell_active(ix - 1, iy) && mesh.cell_active(ix, iy)) {
        set.bases.push_back(Basis{Orientation::x, ix, iy, ix * mesh.dx, (iy + 0.5) * mesh.dy});
      }
    }
  }
  set.n_x = int(set.bases.size());
  for (int iy = 1; iy < mesh.ny; ++iy) {
    for (int ix = 0; ix < mesh.nx; ++ix) {
      if (mesh.cell_active(ix, iy - 1) && mesh.cell_active(ix, iy)) {
        set.bases.push_back(Basis{Orientation::y, ix, iy, (ix + 0.5) * mesh.dx, iy * mesh.dy});
      }
    }
  }
  set.n_y = int(set.bases.size()) - set.n_x;
  if (set.bases.empty()) {
    throw std::invalid_argument("[ERROR] build_basis(): mesh has no interior shared edges.");
  }
  return set;
}

cplx sinc_c(cplx z) {
  if (std::abs(z) < 1e-4) {
    const cplx z2 = z * z;
    return 1.0 - z2 / 6.0 * (1.0 - z2 / 20.0);
  }
  return std::sin(z) / z;
}

cplx rooftop_shape(Orientation orient, const Mesh& mesh, cplx kx, cplx ky) {
  const cplx sx = sinc_c(kx * (0.5 * mesh.dx));
  const cplx sy = sinc_c(ky * (0.5 * mesh.dy));
  const double a = mesh.dx * mesh.dy;
  return orient == Orientation::x ? a * sx * sx * sy : a * sy * sy * sx;
}

cplx basis_spectrum(const Basis& basis, const Mesh& mesh, cplx kx, cplx ky) {
  return rooftop_shape(basis.orient, mesh, kx, ky) *
         std::exp(-j1i * (kx * basis.cx + ky * basis.cy));
}

}  // namespace patchbound
