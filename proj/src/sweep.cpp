#include "patchbound/sweep.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "patchbound/bounds.hpp"
#include "patchbound/pbop_io.hpp"

namespace patchbound {
namespace {

namespace fs = std::filesystem;

std::string fmt9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv_mix(std::uint64_t h, double v) {
  return fnv_mix(h, std::bit_cast<std::uint64_t>(v));
}

// Disk-cache key: everything the assembled operators depend on except the
// sheet resistance (the Ohmic Gram operator is rebuilt per point).
std::uint64_t assembly_key(std::uint64_t mesh_id, const SweepPoint& p, const SweepConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  h = fnv_mix(h, mesh_id);
  h = fnv_mix(h, p.f_hz);
  h = fnv_mix(h, p.eps_r.real());
  h = fnv_mix(h, p.eps_r.imag());
  h = fnv_mix(h, p.h);
  h = fnv_mix(h, std::uint64_t(cfg.n_theta));
  h = fnv_mix(h, std::uint64_t(cfg.n_phi));
  h = fnv_mix(h, cfg.kmax_factor);
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

AssemblyOptions assembly_options(const SweepConfig& cfg, int threads) {
  AssemblyOptions o;
  o.n_theta = cfg.n_theta;
  o.n_phi = cfg.n_phi;
  o.kmax_factor = cfg.kmax_factor;
  o.threads = std::max(1, threads);
  return o;
}

std::mutex log_mu;

void log_line(bool verbose, const std::string& msg) {
  if (!verbose) return;
  std::lock_guard<std::mutex> lk(log_mu);
  std::cerr << "[info] " << msg << "\n";
}

// Assembles (or loads from the disk cache) the operator set of one point at
// zero sheet resistance.
OperatorSet load_or_assemble(const SweepConfig& cfg, const SweepPoint& p, const BasisSet& basis,
                             const RunOptions& run, int assembly_threads, bool* cache_hit) {
  if (cache_hit != nullptr) *cache_hit = false;
  const std::uint64_t key = assembly_key(mesh_hash(basis.mesh), p, cfg);
  const fs::path cache_file =
      run.cache_dir.empty() ? fs::path() : run.cache_dir / (hex16(key) + ".pbop");

  if (!cache_file.empty() && fs::exists(cache_file)) {
    try {
      OperatorSet ops = operators_from_archive(read_archive(cache_file), basis);
      if (ops.wave.f != p.f_hz || ops.stack.eps_r != p.eps_r || ops.stack.h != p.h ||
          ops.quad.n_theta != cfg.n_theta || ops.quad.n_phi != cfg.n_phi) {
        throw std::runtime_error("cached operators disagree with the requested point");
      }
      ops.r_s = 0.0;
      ops.r_ohm = ohmic_gram(basis, 0.0);
      if (cache_hit != nullptr) *cache_hit = true;
      log_line(run.verbose, "cache hit " + cache_file.string() + ", assembly skipped");
      return ops;
    } catch (const std::exception& e) {
      log_line(run.verbose, "cache entry " + cache_file.string() + " rejected: " + e.what());
    }
  }

  const SubstrateStack stack(p.eps_r, p.h);
  OperatorSet ops =
      assemble_operators(basis, stack, p.f_hz, 0.0, assembly_options(cfg, assembly_threads));
  log_line(run.verbose, "assembled operators for point " + std::to_string(p.index) + " (n=" +
                            std::to_string(ops.z.rows()) + ")");
  if (!cache_file.empty()) {
    fs::create_directories(run.cache_dir);
    const fs::path tmp = cache_file.string() + ".tmp";
    write_archive(tmp, archive_from_operators(ops));
    fs::rename(tmp, cache_file);
  }
  return ops;
}

// Memoizing provider shared by the sweep workers: one assembly per unique
// key, concurrent requesters wait on the owner's future.
class OpsProvider {
 public:
  OpsProvider(const SweepConfig& cfg, const RunOptions& run, int assembly_threads)
      : cfg_(cfg), run_(run), assembly_threads_(assembly_threads) {}

  std::shared_ptr<const OperatorSet> base_ops(const SweepPoint& p, const BasisSet& basis) {
    using Value = std::shared_ptr<const OperatorSet>;
    const std::uint64_t key = assembly_key(mesh_hash(basis.mesh), p, cfg_);
    std::shared_ptr<std::promise<Value>> owner;
    std::shared_future<Value> fut;
    {
      std::lock_guard<std::mutex> lk(mu_);
      auto it = memo_.find(key);
      if (it == memo_.end()) {
        owner = std::make_shared<std::promise<Value>>();
        it = memo_.emplace(key, owner->get_future().share()).first;
      }
      fut = it->second;
    }
    if (owner) {
      try {
        bool hit = false;
        auto ops = std::make_shared<OperatorSet>(
            load_or_assemble(cfg_, p, basis, run_, assembly_threads_, &hit));
        (hit ? n_cache_hits : n_assembled).fetch_add(1);
        owner->set_value(std::move(ops));
      } catch (...) {
        owner->set_exception(std::current_exception());
      }
    }
    return fut.get();
  }

  std::atomic<int> n_assembled{0};
  std::atomic<int> n_cache_hits{0};

 private:
  const SweepConfig& cfg_;
  const RunOptions& run_;
  int assembly_threads_;
  std::mutex mu_;
  std::map<std::uint64_t, std::shared_future<std::shared_ptr<const OperatorSet>>> memo_;
};

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

void append_field(std::string& row, const std::string& field) {
  row += ',';
  row += field;
}

}  // namespace

PointRecord evaluate_point(const OperatorSet& ops, const SweepConfig& cfg, const SweepPoint& p) {
  PointRecord rec;
  rec.point = p;
  rec.resonant = cfg.resonant;
  rec.n_basis = int(ops.z.rows());

  BoundOptions bo;
  bo.p_in = cfg.p_in;
  bo.gap_tol = cfg.gap_tol;

  const Eigen::MatrixXcd r_tot = ops.r + ops.r_ohm;
  const BoundResult nonres = efficiency_ub_nonresonant(ops.r_r, r_tot, bo);
  rec.eta_ub_nonresonant = nonres.value;

  const BoundResult primary =
      cfg.resonant ? efficiency_ub_resonant(ops.r_r, r_tot, ops.x, bo) : nonres;
  rec.eta_ub = primary.value;
  rec.nu = primary.nu;
  rec.rel_gap = primary.rel_gap;
  rec.res_resonance = primary.res_resonance;
  rec.res_power = primary.res_power;
  if (!primary.certified) rec.error = sanitize("uncertified: " + primary.diagnostic);

  const PowerReport pw = power_report(ops, primary.current);
  rec.delta = pw.delta;
  if (p.r_s > 0.0) {
    rec.has_delta_rho = true;
    rec.delta_rho_norm = pw.delta_rho * z0 / p.r_s;
  }

  if (cfg.has_gain) {
    const double th = cfg.gain_theta_deg * pi / 180.0;
    const double ph = cfg.gain_phi_deg * pi / 180.0;
    const Eigen::MatrixXcd f_rows = farfield_rows(ops.basis, ops.stack, ops.wave, th, ph);
    const BoundResult g = gain_ub(f_rows, r_tot, ops.x, cfg.resonant, &ops.r_r, bo);
    rec.has_gain = true;
    rec.gain_ub = g.value;
    rec.directivity = g.directivity;
    if (!g.certified && rec.error.empty()) {
      rec.error = sanitize("uncertified gain: " + g.diagnostic);
    }
  }

  rec.ok = true;
  return rec;
}

OperatorSet assemble_point(const SweepConfig& cfg, const SweepPoint& p, const RunOptions& run,
                           bool* cache_hit) {
  int nx = 0, ny = 0;
  mesh_dimensions(cfg, nx, ny);
  const BasisSet basis = build_basis(build_mesh(DesignRegion{p.lx, p.ly}, nx, ny, cfg.mask));
  OperatorSet ops = load_or_assemble(cfg, p, basis, run, std::max(1, run.threads), cache_hit);
  ops.r_s = p.r_s;
  ops.r_ohm = ohmic_gram(basis, p.r_s);
  return ops;
}

std::string csv_header(bool timing) {
  std::string h =
      "index,f_hz,lx_over_lambda0,lx_over_lambda_eps,lx_m,ly_m,h_m,eps_r_real,tan_delta,r_s,"
      "resonant,n_basis,eta_ub,eta_ub_nonresonant,gain_ub,directivity,delta,"
      "delta_rho_z0_over_rs,nu,rel_gap,res_resonance,res_power,error";
  if (timing) h += ",wall_ms";
  return h;
}

std::string csv_row(const PointRecord& rec, bool timing) {
  const SweepPoint& p = rec.point;
  std::string row = std::to_string(p.index);
  append_field(row, fmt9(p.f_hz));
  append_field(row, fmt9(p.lx_over_lambda0));
  append_field(row, fmt9(p.lx_over_lambda_eps));
  append_field(row, fmt9(p.lx));
  append_field(row, fmt9(p.ly));
  append_field(row, fmt9(p.h));
  append_field(row, fmt9(p.eps_r.real()));
  append_field(row, fmt9(p.tan_delta));
  append_field(row, fmt9(p.r_s));
  append_field(row, rec.resonant ? "1" : "0");
  append_field(row, rec.ok ? std::to_string(rec.n_basis) : "");
  append_field(row, rec.ok ? fmt9(rec.eta_ub) : "");
  append_field(row, rec.ok ? fmt9(rec.eta_ub_nonresonant) : "");
  append_field(row, rec.ok && rec.has_gain ? fmt9(rec.gain_ub) : "");
  append_field(row, rec.ok && rec.has_gain ? fmt9(rec.directivity) : "");
  append_field(row, rec.ok ? fmt9(rec.delta) : "");
  append_field(row, rec.ok && rec.has_delta_rho ? fmt9(rec.delta_rho_norm) : "");
  append_field(row, rec.ok ? fmt9(rec.nu) : "");
  append_field(row, rec.ok ? fmt9(rec.rel_gap) : "");
  append_field(row, rec.ok ? fmt9(rec.res_resonance) : "");
  append_field(row, rec.ok ? fmt9(rec.res_power) : "");
  append_field(row, sanitize(rec.error));
  if (timing) append_field(row, fmt9(rec.wall_ms));
  return row;
}

SweepSummary run_sweep(const SweepConfig& cfg, const RunOptions& run) {
  const std::vector<SweepPoint> points = expand_points(cfg);
  int nx = 0, ny = 0;
  mesh_dimensions(cfg, nx, ny);
  log_line(run.verbose, "sweep: " + std::to_string(points.size()) + " points on a " +
                            std::to_string(nx) + "x" + std::to_string(ny) + " mesh");

  SweepSummary summary;
  summary.n_points = int(points.size());
  summary.records.resize(points.size());

  const int pool = std::max(1, std::min<int>(run.threads, int(points.size())));
  // A single worker keeps the panel-level parallelism of the assembly.
  OpsProvider provider(cfg, run, pool == 1 ? std::max(1, run.threads) : 1);

  if (!cfg.dump_dir.empty()) fs::create_directories(cfg.dump_dir);

  std::atomic<std::size_t> cursor{0};
  auto work = [&]() {
    for (std::size_t i; (i = cursor.fetch_add(1)) < points.size();) {
      const SweepPoint& p = points[i];
      const auto t0 = std::chrono::steady_clock::now();
      PointRecord rec;
      rec.point = p;
      rec.resonant = cfg.resonant;
      try {
        const BasisSet basis =
            build_basis(build_mesh(DesignRegion{p.lx, p.ly}, nx, ny, cfg.mask));
        const std::shared_ptr<const OperatorSet> base = provider.base_ops(p, basis);
        OperatorSet ops = *base;
        ops.r_s = p.r_s;
        ops.r_ohm = ohmic_gram(basis, p.r_s);
        rec = evaluate_point(ops, cfg, p);
        if (!cfg.dump_dir.empty()) {
          write_archive(cfg.dump_dir / ("point_" + std::to_string(p.index) + ".pbop"),
                        archive_from_operators(ops));
        }
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = sanitize(e.what());
      }
      rec.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      summary.records[i] = std::move(rec);
    }
  };

  if (pool == 1) {
    work();
  } else {
    std::vector<std::thread> workers;
    workers.reserve(std::size_t(pool));
    for (int t = 0; t < pool; ++t) workers.emplace_back(work);
    for (std::thread& t : workers) t.join();
  }

  summary.n_assembled = provider.n_assembled.load();
  summary.n_cache_hits = provider.n_cache_hits.load();
  for (const PointRecord& rec : summary.records) summary.n_failed += rec.ok ? 0 : 1;

  fs::path out = !run.out_override.empty() ? run.out_override
                 : !cfg.csv_path.empty()   ? cfg.csv_path
                                           : fs::path(cfg.source.stem().string() + ".csv");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os.good()) throw std::runtime_error("[ERROR] cannot write CSV '" + out.string() + "'");
  os << "# patchbound-csv v1\n" << csv_header(run.timing) << "\n";
  for (const PointRecord& rec : summary.records) os << csv_row(rec, run.timing) << "\n";
  os.flush();
  if (!os.good()) throw std::runtime_error("[ERROR] failed writing CSV '" + out.string() + "'");
  summary.csv = out;
  log_line(run.verbose, "wrote " + out.string() + " (" + std::to_string(summary.n_points) +
                            " rows, " + std::to_string(summary.n_failed) + " failed)");
  return summary;
}

}  // namespace patchbound
