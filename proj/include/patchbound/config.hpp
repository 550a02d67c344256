// Sweep configuration: sectioned key = value files describing a geometry /
// loss grid, solver settings and output destinations, expanded into the flat
// list of evaluation points that drives the sweep runner.
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "patchbound/constants.hpp"
#include "patchbound/geometry.hpp"
#include "patchbound/semianalytic.hpp"

namespace patchbound {

// Malformed or inconsistent configuration; the message carries file:line.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// How the patch size axis of the sweep is specified.
enum class SizeMode {
  ratio_eps,  // lx / lambda_eps at a fixed frequency
  ratio_free, // lx / lambda_0 at a fixed frequency
  absolute,   // fixed lx in metres, swept over frequency
};

// Inputs of the bandwidth-to-bound subcommands, from the [semianalytic]
// section.
struct SemianalyticConfig {
  bool has_q = false;
  double q = 0.0;
  double f_meas = 0.0;    // Hz; 0 = use the sweep frequency
  double f_target = 0.0;  // Hz
  QScalingRule scaling = QScalingPowerLaw{};
};

struct SweepConfig {
  // [geometry]
  SizeMode size_mode = SizeMode::ratio_eps;
  std::vector<double> sizes;        // ratios, or absolute lx in metres
  std::vector<double> frequencies;  // Hz; more than one only in absolute mode
  double ly_over_lx = 0.77;
  double h_over_lx = 0.05;
  bool ly_absolute = false;
  bool h_absolute = false;
  double ly_m = 0.0;
  double h_m = 0.0;
  int nx = 0;  // 0: derived from cells_per_wavelength
  int ny = 0;  // 0: derived from nx and the aspect ratio
  ShapeMask mask = ShapeMask::full();

  // [substrate]
  double eps_r_real = 1.0;
  std::vector<double> tan_delta{0.0};

  // [ohmic]
  std::vector<double> r_s{0.0};

  // [solve]
  bool resonant = true;
  bool has_gain = false;
  double gain_theta_deg = 0.0;
  double gain_phi_deg = 0.0;
  int n_theta = 64;
  int n_phi = 128;
  double cells_per_wavelength = 20.0;
  double p_in = 0.5;
  double gap_tol = 1e-6;
  double kmax_factor = 12.0;

  // [semianalytic]
  SemianalyticConfig semi;

  // [output]; paths are resolved relative to the config file.
  std::filesystem::path csv_path;
  std::filesystem::path dump_dir;

  std::filesystem::path source;
};

// One evaluation point of the expanded grid.
struct SweepPoint {
  int index = 0;
  double f_hz = 0.0;
  double lx = 0.0, ly = 0.0, h = 0.0;  // metres
  double tan_delta = 0.0;
  double r_s = 0.0;
  cplx eps_r{1.0, 0.0};
  double lx_over_lambda0 = 0.0;
  double lx_over_lambda_eps = 0.0;
};

SweepConfig parse_config(const std::filesystem::path& path);

// Grid expansion in CSV row order: size (or frequency), then tan_delta,
// then R_s, innermost last.
std::vector<SweepPoint> expand_points(const SweepConfig& cfg);

// Mesh dimensions for the whole sweep: explicit nx/ny when configured, else
// nx from the cells-per-wavelength density at the electrically largest point
// and ny from the aspect ratio.
void mesh_dimensions(const SweepConfig& cfg, int& nx, int& ny);

}  // namespace patchbound
