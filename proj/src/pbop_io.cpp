#include "patchbound/pbop_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace patchbound {
namespace {

constexpr char kMagic[5] = {'P', 'B', 'O', 'P', '1'};
constexpr std::uint64_t kMaxDim = 1ull << 32;  // sanity bound on rows/cols

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = char((v >> (8 * i)) & 0xffu);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double d) {
  put_u64(os, std::bit_cast<std::uint64_t>(d));
}

struct Reader {
  std::ifstream in;
  std::uint64_t offset = 0;
  std::string where;

  void take(char* dst, std::size_t n) {
    in.read(dst, std::streamsize(n));
    if (std::size_t(in.gcount()) != n) {
      throw std::runtime_error("[ERROR] pbop: '" + where + "' truncated at byte offset " +
                               std::to_string(offset + std::size_t(std::max(
                                                           std::streamsize(0), in.gcount()))) +
                               ".");
    }
    offset += n;
  }
  std::uint64_t u64() {
    char b[8];
    take(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(b[i])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace

void OperatorArchive::add(std::string name, Eigen::MatrixXcd m) {
  matrices.emplace_back(std::move(name), std::move(m));
}

const Eigen::MatrixXcd* OperatorArchive::find(const std::string& name) const {
  for (const auto& [n, m] : matrices) {
    if (n == name) return &m;
  }
  return nullptr;
}

void write_archive(const std::filesystem::path& path, const OperatorArchive& archive) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw std::runtime_error("[ERROR] pbop: cannot open '" + path.string() + "' for writing.");
  }
  os.write(kMagic, sizeof(kMagic));
  put_u64(os, archive.matrices.size());
  for (const auto& [name, m] : archive.matrices) {
    put_u64(os, name.size());
    os.write(name.data(), std::streamsize(name.size()));
    put_u64(os, std::uint64_t(m.rows()));
    put_u64(os, std::uint64_t(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        put_f64(os, m(r, c).real());
        put_f64(os, m(r, c).imag());
      }
    }
  }
  std::string meta;
  for (const auto& [k, v] : archive.metadata) {
    meta += k;
    meta += '=';
    meta += v;
    meta += '\n';
  }
  put_u64(os, meta.size());
  os.write(meta.data(), std::streamsize(meta.size()));
  os.flush();
  if (!os) {
    throw std::runtime_error("[ERROR] pbop: write to '" + path.string() + "' failed.");
  }
}

OperatorArchive read_archive(const std::filesystem::path& path) {
  Reader rd;
  rd.in.open(path, std::ios::binary);
  rd.where = path.string();
  if (!rd.in) {
    throw std::runtime_error("[ERROR] pbop: cannot open '" + path.string() + "'.");
  }
  char magic[sizeof(kMagic)];
  rd.take(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("[ERROR] pbop: '" + path.string() +
                             "' does not start with the PBOP1 magic.");
  }
  OperatorArchive archive;
  const std::uint64_t count = rd.u64();
  if (count > 4096) {
    throw std::runtime_error("[ERROR] pbop: implausible matrix count " + std::to_string(count) +
                             " in '" + path.string() + "'.");
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t name_len = rd.u64();
    if (name_len > 4096) {
      throw std::runtime_error("[ERROR] pbop: implausible name length in '" + path.string() +
                               "'.");
    }
    std::string name(name_len, '\0');
    rd.take(name.data(), name_len);
    const std::uint64_t rows = rd.u64(), cols = rd.u64();
    if (rows >= kMaxDim || cols >= kMaxDim) {
      throw std::runtime_error("[ERROR] pbop: implausible dimensions for matrix '" + name +
                               "' in '" + path.string() + "'.");
    }
    Eigen::MatrixXcd m{Eigen::Index(rows), Eigen::Index(cols)};
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double re = rd.f64();
        const double im = rd.f64();
        m(r, c) = cplx(re, im);
      }
    }
    archive.add(std::move(name), std::move(m));
  }
  const std::uint64_t meta_len = rd.u64();
  std::string meta(meta_len, '\0');
  rd.take(meta.data(), meta_len);
  std::istringstream ms(meta);
  std::string line;
  while (std::getline(ms, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0) continue;
    archive.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return archive;
}

namespace {

std::string fmt_full(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

double meta_num(const OperatorArchive& a, const std::string& key) {
  const auto it = a.metadata.find(key);
  if (it == a.metadata.end()) {
    throw std::runtime_error("[ERROR] pbop: archive is missing metadata key '" + key + "'.");
  }
  return std::stod(it->second);
}

}  // namespace

OperatorArchive archive_from_operators(const OperatorSet& ops) {
  OperatorArchive a;
  a.add("z", ops.z);
  a.add("r_ohm", ops.r_ohm);
  a.add("f_s", ops.f_s);
  a.metadata["format"] = "patchbound-operators";
  a.metadata["f_hz"] = fmt_full(ops.wave.f);
  a.metadata["eps_r_real"] = fmt_full(ops.stack.eps_r.real());
  a.metadata["eps_r_imag"] = fmt_full(ops.stack.eps_r.imag());
  a.metadata["h_m"] = fmt_full(ops.stack.h);
  a.metadata["r_s"] = fmt_full(ops.r_s);
  a.metadata["mesh_id"] = std::to_string(ops.mesh_id);
  a.metadata["n_theta"] = std::to_string(ops.quad.n_theta);
  a.metadata["n_phi"] = std::to_string(ops.quad.n_phi);
  a.metadata["n_poles"] = std::to_string(ops.quad.n_poles);
  return a;
}

OperatorSet operators_from_archive(const OperatorArchive& archive, const BasisSet& basis) {
  const Eigen::MatrixXcd* z = archive.find("z");
  const Eigen::MatrixXcd* r_ohm = archive.find("r_ohm");
  const Eigen::MatrixXcd* f_s = archive.find("f_s");
  if (z == nullptr || r_ohm == nullptr || f_s == nullptr) {
    throw std::runtime_error("[ERROR] pbop: archive lacks one of the matrices z, r_ohm, f_s.");
  }
  const std::uint64_t mesh_id = std::uint64_t(std::stoull(archive.metadata.at("mesh_id")));
  if (mesh_id != mesh_hash(basis.mesh)) {
    throw std::runtime_error(
        "[ERROR] pbop: archive mesh fingerprint does not match the provided basis.");
  }
  const int n = basis.size();
  if (z->rows() != n || z->cols() != n || r_ohm->rows() != n || f_s->cols() != n) {
    throw std::runtime_error("[ERROR] pbop: archive matrix dimensions do not match the basis.");
  }
  OperatorSet ops;
  ops.basis = basis;
  ops.stack = SubstrateStack(cplx(meta_num(archive, "eps_r_real"), meta_num(archive, "eps_r_imag")),
                             meta_num(archive, "h_m"));
  ops.wave = WaveContext::from_frequency(meta_num(archive, "f_hz"));
  ops.r_s = meta_num(archive, "r_s");
  ops.mesh_id = mesh_id;
  ops.z = *z;
  split_rx(ops.z, ops.r, ops.x);
  ops.r_ohm = *r_ohm;
  ops.f_s = *f_s;
  ops.r_r = Eigen::MatrixXcd(ops.f_s.adjoint() * ops.f_s);
  ops.quad.n_theta = int(meta_num(archive, "n_theta"));
  ops.quad.n_phi = int(meta_num(archive, "n_phi"));
  ops.quad.n_poles = int(meta_num(archive, "n_poles"));
  return ops;
}

}  // namespace patchbound
