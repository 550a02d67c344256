// Command-line driver: sweeps, single-point efficiency/gain bounds, the
// semi-analytic surface-wave factors, the bandwidth-to-bound pipeline, and
// operator-archive dump/load.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "patchbound/bounds.hpp"
#include "patchbound/config.hpp"
#include "patchbound/pbop_io.hpp"
#include "patchbound/semianalytic.hpp"
#include "patchbound/sweep.hpp"

namespace {

using namespace patchbound;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitAllFailed = 2;
constexpr int kExitPartial = 3;

struct Common {
  std::string config;
  std::string out;
  std::string cache_dir;
  int threads = 1;
  bool verbose = false;
  bool timing = false;
};

void add_common(CLI::App* sub, Common& c, bool config_required = true) {
  auto* opt = sub->add_option("--config", c.config, "sweep configuration file");
  if (config_required) opt->required();
  sub->add_option("--out", c.out, "output path (overrides the config)");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--cache-dir", c.cache_dir, "operator disk cache directory");
  sub->add_flag("--verbose", c.verbose, "log progress to stderr");
  sub->add_flag("--timing", c.timing, "append a wall_ms column to CSV output");
}

RunOptions run_options(const Common& c) {
  RunOptions r;
  r.threads = c.threads;
  r.cache_dir = c.cache_dir;
  r.out_override = c.out;
  r.verbose = c.verbose;
  r.timing = c.timing;
  return r;
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// The single evaluation point of a config; more than one is a usage error
// for the point-wise subcommands.
SweepPoint single_point(const SweepConfig& cfg) {
  const std::vector<SweepPoint> pts = expand_points(cfg);
  if (pts.size() != 1) {
    throw ConfigError("[ERROR] " + cfg.source.string() + ": this subcommand needs a single-point"
                      " config, but the grid has " + std::to_string(pts.size()) + " points");
  }
  return pts.front();
}

void print_record(const PointRecord& rec, bool with_gain) {
  std::cout << "lx_over_lambda_eps = " << num(rec.point.lx_over_lambda_eps) << "\n"
            << "f_hz = " << num(rec.point.f_hz) << "\n"
            << "tan_delta = " << num(rec.point.tan_delta) << "\n"
            << "r_s = " << num(rec.point.r_s) << "\n"
            << "n_basis = " << rec.n_basis << "\n"
            << "resonant = " << (rec.resonant ? 1 : 0) << "\n"
            << "eta_ub = " << num(rec.eta_ub) << "\n"
            << "eta_ub_nonresonant = " << num(rec.eta_ub_nonresonant) << "\n";
  if (with_gain) {
    std::cout << "gain_ub = " << num(rec.gain_ub) << "\n"
              << "directivity = " << num(rec.directivity) << "\n";
  }
  std::cout << "delta = " << num(rec.delta) << "\n";
  if (rec.has_delta_rho) {
    std::cout << "delta_rho_z0_over_rs = " << num(rec.delta_rho_norm) << "\n";
  }
  std::cout << "nu = " << num(rec.nu) << "\n"
            << "rel_gap = " << num(rec.rel_gap) << "\n"
            << "res_resonance = " << num(rec.res_resonance) << "\n"
            << "res_power = " << num(rec.res_power) << "\n";
  if (!rec.error.empty()) std::cout << "note = " << rec.error << "\n";
}

int run_point_command(const Common& c, bool need_gain) {
  const SweepConfig cfg = parse_config(c.config);
  if (need_gain && !cfg.has_gain) {
    throw ConfigError("[ERROR] " + cfg.source.string() +
                      ": the gain subcommand needs solve.gain_direction");
  }
  const SweepPoint p = single_point(cfg);
  try {
    const OperatorSet ops = assemble_point(cfg, p, run_options(c));
    const PointRecord rec = evaluate_point(ops, cfg, p);
    print_record(rec, need_gain && rec.has_gain);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitAllFailed;
  }
  return kExitOk;
}

int run_sweep_command(const Common& c) {
  const SweepConfig cfg = parse_config(c.config);
  const SweepSummary s = run_sweep(cfg, run_options(c));
  std::cout << s.csv.string() << ": " << s.n_points << " rows, " << s.n_failed << " failed, "
            << s.n_assembled << " assembled, " << s.n_cache_hits << " cache hits\n";
  if (s.n_failed == 0) return kExitOk;
  return s.n_failed == s.n_points ? kExitAllFailed : kExitPartial;
}

int run_semianalytic(const Common& c) {
  const SweepConfig cfg = parse_config(c.config);
  const SweepPoint p0 = expand_points(cfg).front();
  const double f = cfg.semi.f_meas > 0.0 ? cfg.semi.f_meas : p0.f_hz;
  const WaveContext ctx = WaveContext::from_frequency(f);
  std::cout << "f_hz = " << num(f) << "\n"
            << "h_m = " << num(p0.h) << "\n"
            << "eps_r_real = " << num(cfg.eps_r_real) << "\n";
  for (double tan : cfg.tan_delta) {
    const SubstrateStack stack(cplx(cfg.eps_r_real, -cfg.eps_r_real * tan), p0.h);
    const double dsw = delta_sw(stack, ctx);
    std::cout << "tan_delta = " << num(tan) << ": delta_sw = " << num(dsw);
    if (cfg.semi.has_q) {
      std::cout << ", eta = " << num(efficiency_from_q(cfg.semi.q, tan, dsw))
                << ", q_lb = " << num(q_lossless(cfg.semi.q, tan))
                << ", eta_ub = " << num(eta_ub_from_qlb(q_lossless(cfg.semi.q, tan), tan, dsw));
    }
    std::cout << "\n";
    if (!stack.single_tm_mode(ctx.lambda0)) {
      std::cout << "warning: thickness exceeds the single-TM-mode range\n";
    }
  }
  return kExitOk;
}

int run_pipeline(const Common& c) {
  const SweepConfig cfg = parse_config(c.config);
  if (!cfg.semi.has_q || cfg.semi.f_meas <= 0.0 || cfg.semi.f_target <= 0.0) {
    throw ConfigError("[ERROR] " + cfg.source.string() +
                      ": appendix-pipeline needs [semianalytic] q, f_meas and f_target");
  }
  const SweepPoint p0 = expand_points(cfg).front();
  QLinkInput in;
  in.q = cfg.semi.q;
  in.f_meas = cfg.semi.f_meas;
  in.f_target = cfg.semi.f_target;
  in.eps_r = cplx(cfg.eps_r_real, -cfg.eps_r_real * cfg.tan_delta.front());
  in.h = p0.h;
  in.scaling = cfg.semi.scaling;
  const PipelineReport rep = appendix_pipeline(in);
  std::cout << "q = " << num(in.q) << "\n"
            << "tan_delta = " << num(cfg.tan_delta.front()) << "\n"
            << "delta_sw_meas = " << num(rep.delta_sw_meas) << "\n"
            << "eta_meas = " << num(rep.eta_meas) << "\n"
            << "q_lb_meas = " << num(rep.q_lb_meas) << "\n"
            << "q_lb_target = " << num(rep.q_lb_target) << "\n"
            << "delta_sw_target = " << num(rep.delta_sw_target) << "\n"
            << "eta_ub_target = " << num(rep.eta_ub_target) << "\n"
            << "single_tm_mode_meas = " << (rep.single_tm_mode_meas ? 1 : 0) << "\n"
            << "single_tm_mode_target = " << (rep.single_tm_mode_target ? 1 : 0) << "\n";
  if (!rep.warning.empty()) std::cout << "warning: " << rep.warning << "\n";
  return kExitOk;
}

int run_dump(const Common& c) {
  if (c.out.empty()) throw ConfigError("[ERROR] operators dump needs --out <file.pbop>");
  const SweepConfig cfg = parse_config(c.config);
  const SweepPoint p = single_point(cfg);
  try {
    const OperatorSet ops = assemble_point(cfg, p, run_options(c));
    write_archive(c.out, archive_from_operators(ops));
    std::cout << c.out << ": " << ops.z.rows() << " basis functions, f_hz = " << num(p.f_hz)
              << "\n";
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitAllFailed;
  }
  return kExitOk;
}

int run_load(const Common& c, const std::string& file) {
  const SweepConfig cfg = parse_config(c.config);
  const SweepPoint p = single_point(cfg);
  int nx = 0, ny = 0;
  mesh_dimensions(cfg, nx, ny);
  const BasisSet basis = build_basis(build_mesh(DesignRegion{p.lx, p.ly}, nx, ny, cfg.mask));
  const OperatorArchive archive = read_archive(file);
  const OperatorSet ops = operators_from_archive(archive, basis);
  std::cout << file << ": " << archive.matrices.size() << " matrices, n_basis = " << ops.z.rows()
            << "\n";
  for (const auto& [name, m] : archive.matrices) {
    std::cout << name << ": " << m.rows() << "x" << m.cols() << ", frobenius = " << num(m.norm())
              << "\n";
  }
  if (!c.out.empty()) {
    write_archive(c.out, archive_from_operators(ops));
    std::cout << "rewrote " << c.out << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physical upper bounds on the radiation efficiency and gain of patch antennas "
               "over a grounded dielectric slab"};
  app.require_subcommand(1);

  Common c_eff, c_gain, c_sweep, c_semi, c_pipe, c_dump, c_load;
  std::string load_file;

  CLI::App* eff = app.add_subcommand("efficiency", "efficiency bound at a single design point");
  add_common(eff, c_eff);
  CLI::App* gain = app.add_subcommand("gain", "gain bound at a single design point");
  add_common(gain, c_gain);
  CLI::App* sweep = app.add_subcommand("sweep", "evaluate a config grid into CSV");
  add_common(sweep, c_sweep);
  CLI::App* semi =
      app.add_subcommand("semianalytic", "thin-substrate surface-wave dissipation factors");
  add_common(semi, c_semi);
  CLI::App* pipe =
      app.add_subcommand("appendix-pipeline", "bandwidth-to-bound frequency-scaling pipeline");
  add_common(pipe, c_pipe);
  CLI::App* ops = app.add_subcommand("operators", "operator archive utilities");
  ops->require_subcommand(1);
  CLI::App* dump = ops->add_subcommand("dump", "assemble one point and write a .pbop archive");
  add_common(dump, c_dump);
  CLI::App* load = ops->add_subcommand("load", "read a .pbop archive and validate it");
  load->add_option("file", load_file, "archive path")->required();
  add_common(load, c_load);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (eff->parsed()) return run_point_command(c_eff, false);
    if (gain->parsed()) return run_point_command(c_gain, true);
    if (sweep->parsed()) return run_sweep_command(c_sweep);
    if (semi->parsed()) return run_semianalytic(c_semi);
    if (pipe->parsed()) return run_pipeline(c_pipe);
    if (dump->parsed()) return run_dump(c_dump);
    if (load->parsed()) return run_load(c_load, load_file);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitAllFailed;
  }
  return kExitConfig;
}
