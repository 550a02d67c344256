#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "patchbound/mom.hpp"

namespace patchbound {

// Portable named-matrix container.
//
// Byte layout (all integers 64-bit little-endian unsigned, doubles IEEE-754
// little-endian):
//   magic "PBOP1"
//   u64 matrix_count
//   matrix_count records of:
//     u64 name_length, name bytes (ASCII)
//     u64 rows, u64 cols
//     rows*cols complex entries, row-major, as (re, im) float64 pairs
//   u64 metadata_length, metadata bytes ("key=value\n" lines)
struct OperatorArchive {
  std::vector<std::pair<std::string, Eigen::MatrixXcd>> matrices;
  std::map<std::string, std::string> metadata;

  void add(std::string name, Eigen::MatrixXcd m);
  // nullptr when the name is absent.
  const Eigen::MatrixXcd* find(const std::string& name) const;
};

void write_archive(const std::filesystem::path& path, const OperatorArchive& archive);
OperatorArchive read_archive(const std::filesystem::path& path);

// Archive view of an operator set: stores the independent matrices (z, r_ohm,
// f_s) plus enough metadata to validate a reload against a rebuilt basis.
OperatorArchive archive_from_operators(const OperatorSet& ops);
// Rebuilds the full set (r, x, r_r re-derived) and cross-checks dimensions and
// the mesh fingerprint against `basis`.
OperatorSet operators_from_archive(const OperatorArchive& archive, const BasisSet& basis);

}  // namespace patchbound
