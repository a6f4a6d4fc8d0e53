#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ibf/config.hpp"
#include "ibf/core.hpp"

namespace ibf {

/// Ordered "key = value" run record.
class Manifest {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);
  void add(const std::string& key, Index value);
  void add(const std::string& key, int value) { add(key, static_cast<Index>(value)); }
  void add(const std::string& key, const char* value) { add(key, std::string(value)); }
  void write(const std::string& path) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Domain and dwell grids of a configuration; the dwell margin defaults to
/// five scale lengths of the widest beam.
GridPair build_geometry(const RunConfig& cfg);

/// Eigenvalue table, eigenvector maps and manifest.
void cmd_spectrum(const RunConfig& cfg, const std::string& out_dir);
/// Runs the configured solver on a measurement map.
void cmd_solve(const RunConfig& cfg, const std::string& input, const std::string& out_dir);
/// Writes measurement.txt: a seeded random combination of the leading left
/// singular vectors of every beam plus white noise. Normal variates come from
/// std::mt19937_64 through the Box-Muller transform, two per pair of draws.
void cmd_synth(const RunConfig& cfg, std::uint64_t seed, const std::string& out_dir);
/// Joint Tikhonov solve for every configured beam.
void cmd_multibeam(const RunConfig& cfg, const std::string& input, const std::string& out_dir);
/// Writes the assembled A_i* A_j matrices.
void cmd_kernel_dump(const RunConfig& cfg, const std::string& out_dir);

/// Standard normal variates by Box-Muller on a 64-bit Mersenne Twister.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed);
  double next();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ibf
