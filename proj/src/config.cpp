#include "patchbound/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <utility>

namespace patchbound {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct Loc {
  const std::filesystem::path* path;
  int line;
  std::string str() const { return path->string() + ":" + std::to_string(line); }
};

[[noreturn]] void fail(const Loc& loc, const std::string& msg) {
  throw ConfigError("[ERROR] " + loc.str() + ": " + msg);
}

double parse_double(const std::string& text, const Loc& loc) {
  const std::string t = trim(text);
  if (t.empty()) fail(loc, "expected a number, got an empty value");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) fail(loc, "cannot parse number '" + t + "'");
  if (!std::isfinite(v)) fail(loc, "non-finite number '" + t + "'");
  return v;
}

long parse_int(const std::string& text, const Loc& loc) {
  const double v = parse_double(text, loc);
  const long i = std::lround(v);
  if (double(i) != v) fail(loc, "expected an integer, got '" + trim(text) + "'");
  return i;
}

bool parse_bool(const std::string& text, const Loc& loc) {
  const std::string t = trim(text);
  if (t == "true") return true;
  if (t == "false") return false;
  fail(loc, "expected true or false, got '" + t + "'");
}

// Either "start:stop:count" (linear, stop > start when count > 1) or a
// comma-separated list of numbers; a bare scalar is a one-element list.
std::vector<double> parse_list(const std::string& text, const Loc& loc) {
  const std::string t = trim(text);
  if (t.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::istringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) fail(loc, "range must be start:stop:count, got '" + t + "'");
    const double a = parse_double(parts[0], loc);
    const double b = parse_double(parts[1], loc);
    const long n = parse_int(parts[2], loc);
    if (n < 1) fail(loc, "range count must be >= 1");
    if (n > 1 && !(b > a)) fail(loc, "range stop must exceed start when count > 1");
    std::vector<double> out;
    out.reserve(std::size_t(n));
    for (long i = 0; i < n; ++i) {
      out.push_back(n == 1 ? a : a + (b - a) * double(i) / double(n - 1));
    }
    return out;
  }
  std::vector<double> out;
  std::istringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, loc));
  if (out.empty()) fail(loc, "expected a number list");
  return out;
}

void require_positive(const std::vector<double>& v, const char* what, const Loc& loc) {
  for (double x : v) {
    if (!(x > 0.0)) fail(loc, std::string(what) + " entries must be positive");
  }
}

ShapeMask parse_shape(const std::string& text, const std::filesystem::path& base, const Loc& loc) {
  std::istringstream ss(trim(text));
  std::string kind;
  ss >> kind;
  if (kind == "full") return ShapeMask::full();
  if (kind == "slot_loaded" || kind == "h_shaped") {
    double a = kind == "slot_loaded" ? 0.5 : 1.0 / 3.0;
    double b = kind == "slot_loaded" ? 0.5 : 1.0 / 3.0;
    if (ss >> a && !(ss >> b)) fail(loc, "shape '" + kind + "' takes zero or two parameters");
    if (!(a > 0.0) || !(b > 0.0) || a > 1.0 || b > 1.0) {
      fail(loc, "shape parameters must lie in (0, 1]");
    }
    return kind == "slot_loaded" ? ShapeMask::slot_loaded(a, b) : ShapeMask::h_shaped(a, b);
  }
  if (kind.rfind("grid:", 0) == 0) {
    const std::filesystem::path p = base / kind.substr(5);
    std::ifstream in(p);
    if (!in.good()) fail(loc, "cannot open mask grid file '" + p.string() + "'");
    std::ostringstream body;
    body << in.rdbuf();
    try {
      return ShapeMask::custom_grid(body.str());
    } catch (const std::exception& e) {
      fail(loc, "bad mask grid '" + p.string() + "': " + e.what());
    }
  }
  fail(loc, "unknown shape '" + kind + "' (full, slot_loaded, h_shaped, grid:<path>)");
}

QScalingRule parse_scaling(const std::string& text, const Loc& loc) {
  const std::string t = trim(text);
  if (t.rfind("power:", 0) == 0) return QScalingPowerLaw{parse_double(t.substr(6), loc)};
  if (t.rfind("pinned:", 0) == 0) {
    const double q = parse_double(t.substr(7), loc);
    if (!(q > 0.0)) fail(loc, "pinned Q must be positive");
    return QScalingPinned{q};
  }
  fail(loc, "scaling must be power:<exponent> or pinned:<q_lb>, got '" + t + "'");
}

}  // namespace

SweepConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.good()) throw ConfigError("[ERROR] cannot open config file '" + path.string() + "'");

  SweepConfig cfg;
  cfg.source = path;
  const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";

  int size_keys = 0, freq_keys = 0, ly_keys = 0, h_keys = 0;
  std::map<std::string, int> seen;  // "section/key" -> first line
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const Loc loc{&path, line_no};
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(loc, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      static const char* known[] = {"geometry", "substrate", "ohmic",
                                    "solve",    "semianalytic", "output"};
      bool ok = false;
      for (const char* k : known) ok = ok || section == k;
      if (!ok) fail(loc, "unknown section [" + section + "]");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(loc, "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) fail(loc, "empty key");
    if (section.empty()) fail(loc, "key '" + key + "' appears before any [section]");
    if (const auto [it, fresh] = seen.emplace(section + "/" + key, line_no); !fresh) {
      fail(loc, "duplicate key '" + key + "' in [" + section + "] (first at line " +
                    std::to_string(it->second) + ")");
    }

    if (section == "geometry") {
      if (key == "lx_over_lambda_eps" || key == "lx_over_lambda0" || key == "lx_mm") {
        ++size_keys;
        if (size_keys > 1) fail(loc, "more than one patch-size specification");
        cfg.sizes = parse_list(value, loc);
        require_positive(cfg.sizes, "size", loc);
        cfg.size_mode = key == "lx_over_lambda_eps" ? SizeMode::ratio_eps
                        : key == "lx_over_lambda0"  ? SizeMode::ratio_free
                                                    : SizeMode::absolute;
        if (cfg.size_mode == SizeMode::absolute) {
          for (double& v : cfg.sizes) v *= 1e-3;
        }
      } else if (key == "frequency") {
        ++freq_keys;
        cfg.frequencies = parse_list(value, loc);
        require_positive(cfg.frequencies, "frequency", loc);
      } else if (key == "ly_over_lx" || key == "ly_mm") {
        ++ly_keys;
        if (ly_keys > 1) fail(loc, "ly specified twice");
        cfg.ly_absolute = key == "ly_mm";
        const double v = parse_double(value, loc);
        if (!(v > 0.0)) fail(loc, "ly must be positive");
        (cfg.ly_absolute ? cfg.ly_m : cfg.ly_over_lx) = cfg.ly_absolute ? v * 1e-3 : v;
      } else if (key == "h_over_lx" || key == "h_mm") {
        ++h_keys;
        if (h_keys > 1) fail(loc, "substrate height specified twice");
        cfg.h_absolute = key == "h_mm";
        const double v = parse_double(value, loc);
        if (!(v > 0.0)) fail(loc, "substrate height must be positive");
        (cfg.h_absolute ? cfg.h_m : cfg.h_over_lx) = cfg.h_absolute ? v * 1e-3 : v;
      } else if (key == "nx" || key == "ny") {
        const long n = parse_int(value, loc);
        if (n < 1) fail(loc, key + std::string(" must be >= 1"));
        (key == "nx" ? cfg.nx : cfg.ny) = int(n);
      } else if (key == "shape") {
        cfg.mask = parse_shape(value, base, loc);
      } else {
        fail(loc, "unknown key '" + key + "' in [geometry]");
      }
    } else if (section == "substrate") {
      if (key == "eps_r_real") {
        cfg.eps_r_real = parse_double(value, loc);
        if (!(cfg.eps_r_real >= 1.0)) fail(loc, "eps_r_real must be >= 1");
      } else if (key == "tan_delta") {
        cfg.tan_delta = parse_list(value, loc);
        for (double t : cfg.tan_delta) {
          if (t < 0.0) fail(loc, "tan_delta entries must be >= 0");
        }
      } else {
        fail(loc, "unknown key '" + key + "' in [substrate]");
      }
    } else if (section == "ohmic") {
      if (key == "r_s") {
        cfg.r_s = parse_list(value, loc);
        for (double r : cfg.r_s) {
          if (r < 0.0) fail(loc, "r_s entries must be >= 0");
        }
      } else {
        fail(loc, "unknown key '" + key + "' in [ohmic]");
      }
    } else if (section == "solve") {
      if (key == "resonant") {
        cfg.resonant = parse_bool(value, loc);
      } else if (key == "gain_direction") {
        std::istringstream ss(value);
        if (!(ss >> cfg.gain_theta_deg >> cfg.gain_phi_deg) || !(ss >> std::ws).eof()) {
          fail(loc, "gain_direction takes two angles in degrees: theta phi");
        }
        if (cfg.gain_theta_deg < 0.0 || cfg.gain_theta_deg >= 90.0) {
          fail(loc, "gain theta must lie in [0, 90) degrees (above the ground plane)");
        }
        cfg.has_gain = true;
      } else if (key == "n_theta" || key == "n_phi") {
        const long n = parse_int(value, loc);
        if (n < 2) fail(loc, key + std::string(" must be >= 2"));
        if (key == "n_phi" && n % 2 != 0) fail(loc, "n_phi must be even");
        (key == "n_theta" ? cfg.n_theta : cfg.n_phi) = int(n);
      } else if (key == "cells_per_wavelength") {
        cfg.cells_per_wavelength = parse_double(value, loc);
        if (!(cfg.cells_per_wavelength > 0.0)) fail(loc, "cells_per_wavelength must be positive");
      } else if (key == "p_in") {
        cfg.p_in = parse_double(value, loc);
        if (!(cfg.p_in > 0.0)) fail(loc, "p_in must be positive");
      } else if (key == "gap_tol") {
        cfg.gap_tol = parse_double(value, loc);
        if (!(cfg.gap_tol > 0.0)) fail(loc, "gap_tol must be positive");
      } else if (key == "kmax_factor") {
        cfg.kmax_factor = parse_double(value, loc);
        if (!(cfg.kmax_factor > 2.0)) fail(loc, "kmax_factor must exceed 2");
      } else {
        fail(loc, "unknown key '" + key + "' in [solve]");
      }
    } else if (section == "semianalytic") {
      if (key == "q") {
        cfg.semi.q = parse_double(value, loc);
        if (!(cfg.semi.q > 0.0)) fail(loc, "q must be positive");
        cfg.semi.has_q = true;
      } else if (key == "f_meas" || key == "f_target") {
        const double f = parse_double(value, loc);
        if (!(f > 0.0)) fail(loc, key + std::string(" must be positive"));
        (key == "f_meas" ? cfg.semi.f_meas : cfg.semi.f_target) = f;
      } else if (key == "scaling") {
        cfg.semi.scaling = parse_scaling(value, loc);
      } else {
        fail(loc, "unknown key '" + key + "' in [semianalytic]");
      }
    } else {  // output
      if (key == "csv") {
        cfg.csv_path = base / value;
      } else if (key == "dump_dir") {
        cfg.dump_dir = base / value;
      } else {
        fail(loc, "unknown key '" + key + "' in [output]");
      }
    }
  }

  const Loc end{&path, line_no};
  if (cfg.sizes.empty()) {
    fail(end, "missing patch size: set lx_over_lambda_eps, lx_over_lambda0 or lx_mm");
  }
  if (cfg.frequencies.empty()) {
    if (cfg.size_mode == SizeMode::absolute) {
      fail(end, "absolute patch size requires a frequency");
    }
    cfg.frequencies = {1.0e9};
  }
  if (cfg.size_mode != SizeMode::absolute && cfg.frequencies.size() > 1) {
    fail(end, "a frequency sweep requires an absolute patch size (lx_mm)");
  }
  if ((cfg.ly_absolute || cfg.h_absolute) && cfg.size_mode != SizeMode::absolute) {
    fail(end, "ly_mm / h_mm require an absolute patch size (lx_mm)");
  }
  if (cfg.tan_delta.empty()) fail(end, "tan_delta list is empty");
  if (cfg.r_s.empty()) fail(end, "r_s list is empty");
  return cfg;
}

std::vector<SweepPoint> expand_points(const SweepConfig& cfg) {
  std::vector<SweepPoint> points;
  points.reserve(cfg.sizes.size() * cfg.frequencies.size() * cfg.tan_delta.size() *
                 cfg.r_s.size());
  for (double size : cfg.sizes) {
    for (double f : cfg.frequencies) {
      const double lambda0 = c0 / f;
      const double lambda_eps = lambda0 / std::sqrt(cfg.eps_r_real);
      double lx = 0.0;
      switch (cfg.size_mode) {
        case SizeMode::ratio_eps: lx = size * lambda_eps; break;
        case SizeMode::ratio_free: lx = size * lambda0; break;
        case SizeMode::absolute: lx = size; break;
      }
      for (double tan : cfg.tan_delta) {
        for (double rs : cfg.r_s) {
          SweepPoint p;
          p.index = int(points.size());
          p.f_hz = f;
          p.lx = lx;
          p.ly = cfg.ly_absolute ? cfg.ly_m : cfg.ly_over_lx * lx;
          p.h = cfg.h_absolute ? cfg.h_m : cfg.h_over_lx * lx;
          p.tan_delta = tan;
          p.r_s = rs;
          p.eps_r = cplx(cfg.eps_r_real, -cfg.eps_r_real * tan);
          p.lx_over_lambda0 = lx / lambda0;
          p.lx_over_lambda_eps = lx / lambda_eps;
          points.push_back(p);
        }
      }
    }
  }
  return points;
}

void mesh_dimensions(const SweepConfig& cfg, int& nx, int& ny) {
  const std::vector<SweepPoint> points = expand_points(cfg);
  double max_ratio = 0.0;
  double aspect = cfg.ly_over_lx;
  for (const SweepPoint& p : points) {
    if (p.lx_over_lambda_eps > max_ratio) {
      max_ratio = p.lx_over_lambda_eps;
      aspect = p.ly / p.lx;
    }
  }
  nx = cfg.nx > 0 ? cfg.nx
                  : std::max(2, int(std::ceil(cfg.cells_per_wavelength * max_ratio - 1e-9)));
  ny = cfg.ny > 0 ? cfg.ny : std::max(2, int(std::lround(nx * aspect)));
}

}  // namespace patchbound
