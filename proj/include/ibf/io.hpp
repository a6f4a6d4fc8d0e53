#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>

#include "ibf/core.hpp"

namespace ibf {

/// Text matrix file:
///
///   <rows> <cols>
///   grid <dim> <origin...> <spacing...> <mask 0|1>     or     grid none
///   <rows lines of cols space-separated values, %.17g>
///
/// A field on a grid is stored with rows = ny (1 in one dimension) and
/// cols = nx; nodes outside a mask are written as nan and the mask is
/// recovered from them on reading.
struct MatrixFile {
  Eigen::MatrixXd values;
  GridPtr grid;  // null for "grid none"
};

void write_matrix(std::ostream& os, const Eigen::MatrixXd& values, const Grid* grid = nullptr);
void write_matrix(const std::string& path, const Eigen::MatrixXd& values, const Grid* grid = nullptr);
/// Throws Error(invalid_input) with "name:line:" diagnostics.
MatrixFile read_matrix(std::istream& is, const std::string& name = "<stream>");
MatrixFile read_matrix(const std::string& path);

void write_field(const std::string& path, const FieldMap& field);
void write_field(std::ostream& os, const FieldMap& field);
/// Reads a file that carries a grid descriptor.
FieldMap read_field(const std::string& path);
FieldMap field_from_matrix(const MatrixFile& file, const std::string& name);

/// %.17g, the round-trip format of every numeric output.
std::string format_double(double v);

}  // namespace ibf
