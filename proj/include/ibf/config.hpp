#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ibf/beams.hpp"
#include "ibf/kernels.hpp"

namespace ibf {

enum class SolverMode { pseudoinverse, truncated_fit, rkhs, rbf_nonneg, multibeam };

const char* to_string(SolverMode mode) noexcept;

struct BeamBlock {
  Beam beam;
  int line = 0;
};

enum class Shape { interval, rectangle, stadium, disk, mask_file };

struct GeometryBlock {
  Shape shape = Shape::interval;
  double half_length = 0.0;  // interval
  double half_x = 0.0;       // rectangle
  double half_y = 0.0;
  double width = 0.0;   // stadium
  double radius = 0.0;  // disk
  std::string mask_file;
  double spacing = 0.0;
  std::optional<double> margin;  // default 5 beam scales
  KernelMeasure measure = KernelMeasure::lattice;
  Index max_side = 6000;
};

struct SolverBlock {
  SolverMode mode = SolverMode::truncated_fit;
  std::optional<Index> n_tr;
  std::optional<double> l_noise;
  double gamma = 0.0;
  bool nonneg = false;
  Index center_stride = 1;
};

struct SpectrumBlock {
  Index rows = 50;   // rows of the eigenvalue table
  Index dump = 4;    // eigenvector maps written
  Index modes = 400; // modes kept by tensor-product systems
  double fit_fraction = 0.8;
};

struct SynthBlock {
  Index components = 10;
  double noise = 0.0;  // relative to the signal RMS
};

struct IoBlock {
  std::string input;
  std::string output;
  std::optional<std::uint64_t> seed;
};

/// Parsed run configuration. Format: "[section]" headers and "key = value"
/// lines, '#' or ';' comments. Sections: beam (repeatable), geometry, solver,
/// spectrum, synth, io. Unknown sections or keys, duplicates and malformed
/// values are rejected with Error(usage) carrying "name:line:".
struct RunConfig {
  std::vector<BeamBlock> beams;
  std::optional<GeometryBlock> geometry;
  SolverBlock solver;
  SpectrumBlock spectrum;
  SynthBlock synth;
  IoBlock io;
  std::string source;  // file name for diagnostics
};

RunConfig parse_config(std::istream& is, const std::string& name = "<config>");
RunConfig load_config(const std::string& path);

}  // namespace ibf
