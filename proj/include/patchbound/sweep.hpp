// Sweep orchestration: expands a config into evaluation points, assembles
// operators (memoized in memory, optionally cached on disk), runs the bound
// solvers in a worker pool and emits a deterministic CSV.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "patchbound/config.hpp"
#include "patchbound/mom.hpp"

namespace patchbound {

struct RunOptions {
  int threads = 1;
  std::filesystem::path cache_dir;      // empty: no disk cache
  std::filesystem::path out_override;   // empty: use the config's csv path
  bool verbose = false;
  bool timing = false;  // appends a wall_ms column (not byte-deterministic)
};

// One CSV row before formatting.
struct PointRecord {
  SweepPoint point;
  bool ok = false;
  bool resonant = true;
  std::string error;
  int n_basis = 0;
  double eta_ub = 0.0;
  double eta_ub_nonresonant = 0.0;
  bool has_gain = false;
  double gain_ub = 0.0;
  double directivity = 0.0;
  double delta = 0.0;
  bool has_delta_rho = false;
  double delta_rho_norm = 0.0;  // (P_ohm / P_r) * Z0 / R_s
  double nu = 0.0;
  double rel_gap = 0.0;
  double res_resonance = 0.0;
  double res_power = 0.0;
  double wall_ms = 0.0;
};

struct SweepSummary {
  std::filesystem::path csv;
  int n_points = 0;
  int n_failed = 0;
  int n_assembled = 0;   // fresh spectral assemblies
  int n_cache_hits = 0;  // operator sets served from the disk cache
  std::vector<PointRecord> records;
};

// Evaluates the whole grid and writes the CSV. Per-point numerical failures
// become rows with a non-empty error column; only I/O failures throw.
SweepSummary run_sweep(const SweepConfig& cfg, const RunOptions& run);

// Operator bundle for one point (disk cache honored), with the point's sheet
// resistance applied. `cache_hit` (optional) reports whether the disk cache
// served the assembly.
OperatorSet assemble_point(const SweepConfig& cfg, const SweepPoint& p, const RunOptions& run,
                           bool* cache_hit = nullptr);

// Bound evaluation of one point against an assembled operator set.
PointRecord evaluate_point(const OperatorSet& ops, const SweepConfig& cfg, const SweepPoint& p);

// CSV formatting (schema v1); exposed for tests that pin byte-level output.
std::string csv_header(bool timing);
std::string csv_row(const PointRecord& rec, bool timing);

}  // namespace patchbound
