#include "ibf/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace ibf {

namespace {

[[noreturn]] void bad(const std::string& name, int line, const std::string& msg) {
  fail(ErrorKind::invalid_input, name + ":" + std::to_string(line) + ": " + msg);
}

bool parse_double(const std::string& tok, double* out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  *out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size();
}

bool parse_count(const std::string& tok, Index* out) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) return false;
  *out = static_cast<Index>(std::stoll(tok));
  return true;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& values, const Grid* grid) {
  os << values.rows() << ' ' << values.cols() << '\n';
  if (!grid) {
    os << "grid none\n";
  } else {
    os << "grid " << grid->dimension();
    for (const auto& a : grid->axes()) os << ' ' << format_double(a.lower);
    for (const auto& a : grid->axes()) os << ' ' << format_double(a.spacing);
    os << ' ' << (grid->masked() ? 1 : 0) << '\n';
  }
  std::string line;
  for (Index r = 0; r < values.rows(); ++r) {
    line.clear();
    for (Index c = 0; c < values.cols(); ++c) {
      if (c) line += ' ';
      line += format_double(values(r, c));
    }
    line += '\n';
    os << line;
  }
}

void write_matrix(const std::string& path, const Eigen::MatrixXd& values, const Grid* grid) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::invalid_input, "cannot open " + path + " for writing");
  write_matrix(os, values, grid);
  if (!os) fail(ErrorKind::invalid_input, "write failed: " + path);
}

MatrixFile read_matrix(std::istream& is, const std::string& name) {
  std::string line;
  int lineno = 0;
  auto next_tokens = [&](std::vector<std::string>& toks) {
    if (!std::getline(is, line)) return false;
    ++lineno;
    toks.clear();
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) toks.push_back(t);
    return true;
  };
  std::vector<std::string> toks;
  Index rows = 0, cols = 0;
  if (!next_tokens(toks)) bad(name, 1, "empty file");
  if (toks.size() != 2 || !parse_count(toks[0], &rows) || !parse_count(toks[1], &cols))
    bad(name, lineno, "expected '<rows> <cols>'");
  if (!next_tokens(toks) || toks.empty() || toks[0] != "grid") bad(name, lineno, "expected grid descriptor");

  MatrixFile file;
  int dim = 0;
  bool masked = false;
  std::vector<Axis> axes;
  if (toks.size() == 2 && toks[1] == "none") {
    dim = 0;
  } else {
    if (toks.size() < 2 || (toks[1] != "1" && toks[1] != "2")) bad(name, lineno, "grid dimension must be 1 or 2");
    dim = toks[1] == "1" ? 1 : 2;
    if (toks.size() != static_cast<std::size_t>(3 + 2 * dim))
      bad(name, lineno, "grid descriptor needs " + std::to_string(2 * dim + 1) + " values after the dimension");
    axes.resize(static_cast<std::size_t>(dim));
    for (int d = 0; d < dim; ++d) {
      if (!parse_double(toks[2 + d], &axes[d].lower) || !std::isfinite(axes[d].lower))
        bad(name, lineno, "bad grid origin");
      if (!parse_double(toks[2 + dim + d], &axes[d].spacing) || !(axes[d].spacing > 0.0))
        bad(name, lineno, "grid spacing must be positive");
    }
    const std::string& m = toks[2 + 2 * dim];
    if (m != "0" && m != "1") bad(name, lineno, "mask flag must be 0 or 1");
    masked = m == "1";
    if (dim == 1 && rows != 1) bad(name, lineno, "one-dimensional grid requires a single row");
    axes[0].count = cols;
    if (dim == 2) axes[1].count = rows;
  }

  file.values.resize(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (!next_tokens(toks)) bad(name, lineno + 1, "expected " + std::to_string(rows) + " data rows, found " + std::to_string(r));
    if (static_cast<Index>(toks.size()) != cols)
      bad(name, lineno, "expected " + std::to_string(cols) + " values, found " + std::to_string(toks.size()));
    for (Index c = 0; c < cols; ++c)
      if (!parse_double(toks[static_cast<std::size_t>(c)], &file.values(r, c)))
        bad(name, lineno, "bad number '" + toks[static_cast<std::size_t>(c)] + "'");
  }
  while (next_tokens(toks))
    if (!toks.empty()) bad(name, lineno, "trailing data after the declared rows");

  if (dim > 0) {
    if (rows == 0 || cols == 0) bad(name, 1, "grid files need at least one value");
    if (masked) {
      std::vector<std::uint8_t> mask(static_cast<std::size_t>(rows * cols));
      for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) mask[static_cast<std::size_t>(c + cols * r)] = std::isnan(file.values(r, c)) ? 0 : 1;
      file.grid = std::make_shared<const Grid>(axes, std::move(mask));
    } else {
      if (file.values.hasNaN()) bad(name, 3, "nan values in an unmasked grid file");
      file.grid = std::make_shared<const Grid>(axes);
    }
  }
  return file;
}

MatrixFile read_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::invalid_input, "cannot open " + path);
  return read_matrix(is, path);
}

void write_field(std::ostream& os, const FieldMap& field) {
  const Grid& g = field.grid();
  const Index nx = g.axis(0).count;
  const Index ny = g.dimension() == 2 ? g.axis(1).count : 1;
  Eigen::MatrixXd m(ny, nx);
  for (Index iy = 0; iy < ny; ++iy)
    for (Index ix = 0; ix < nx; ++ix) {
      const Index i = g.flat_index(ix, iy);
      m(iy, ix) = g.included(i) ? field(i) : std::numeric_limits<double>::quiet_NaN();
    }
  write_matrix(os, m, &g);
}

void write_field(const std::string& path, const FieldMap& field) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::invalid_input, "cannot open " + path + " for writing");
  write_field(os, field);
  if (!os) fail(ErrorKind::invalid_input, "write failed: " + path);
}

FieldMap field_from_matrix(const MatrixFile& file, const std::string& name) {
  if (!file.grid) fail(ErrorKind::invalid_input, name + ": file has no grid descriptor");
  const Grid& g = *file.grid;
  Eigen::VectorXd v(g.size());
  const Index nx = g.axis(0).count;
  for (Index i = 0; i < g.size(); ++i) {
    const double x = file.values(i / nx, i % nx);
    v(i) = std::isnan(x) ? 0.0 : x;
  }
  return FieldMap(file.grid, std::move(v));
}

FieldMap read_field(const std::string& path) { return field_from_matrix(read_matrix(path), path); }

}  // namespace ibf
