#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "ibf/error.hpp"

namespace ibf {

using Index = Eigen::Index;

/// Dwell grids extend this many beam scale lengths beyond the measurement
/// domain on every side.
inline constexpr double kDwellMarginScales = 5.0;

/// Uniform one-dimensional lattice: points lower + i * spacing, i < count.
struct Axis {
  double lower = 0.0;
  double spacing = 1.0;
  Index count = 0;

  double point(Index i) const { return lower + spacing * static_cast<double>(i); }
  double upper() const { return point(count - 1); }
};

/// Tensor lattice of one or two axes with an optional inclusion mask.
///
/// Storage order is x-fastest: flat index = ix + nx * iy. A masked grid keeps
/// every lattice node; excluded nodes simply carry zero quadrature weight, so
/// fields on a masked grid can still be reshaped into full rectangles.
///
/// The continuous region a grid stands for is the box [first node, last node]
/// when unmasked and the union of cells centred on the included nodes when
/// masked.
class Grid {
 public:
  explicit Grid(std::vector<Axis> axes);
  Grid(std::vector<Axis> axes, std::vector<std::uint8_t> mask);

  Index dimension() const { return static_cast<Index>(axes_.size()); }
  const Axis& axis(Index d) const { return axes_[static_cast<std::size_t>(d)]; }
  const std::vector<Axis>& axes() const { return axes_; }

  /// Number of lattice nodes, included or not.
  Index size() const { return size_; }
  bool masked() const { return !mask_.empty(); }
  bool included(Index i) const { return mask_.empty() || mask_[static_cast<std::size_t>(i)] != 0; }
  Index included_count() const { return included_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  /// Product of the axis spacings.
  double cell_measure() const;
  /// Lebesgue measure of the continuous region (see class comment).
  double volume() const;
  /// Riemann weights: cell_measure() on included nodes, zero elsewhere.
  Eigen::VectorXd weights() const;

  Eigen::VectorXd point(Index i) const;
  /// size() x dimension() matrix of node coordinates.
  Eigen::MatrixXd points() const;
  /// Coordinates of the included nodes only.
  Eigen::MatrixXd included_points() const;
  std::vector<Index> included_indices() const;

  Index flat_index(Index ix, Index iy = 0) const { return ix + axes_[0].count * iy; }
  std::pair<Index, Index> lattice_coords(Index i) const;

  /// Same axes (to round-off) and same mask.
  bool same_as(const Grid& other) const;
  /// Same spacing on every axis and node offsets that are whole multiples of it.
  bool aligned_with(const Grid& other) const;
  /// Every axis of this grid covers the corresponding axis of other.
  bool covers(const Grid& other) const;
  /// Symmetric about the origin on every axis.
  bool centred() const;

 private:
  std::vector<Axis> axes_;
  std::vector<std::uint8_t> mask_;
  Index size_ = 0;
  Index included_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Scalar field sampled on every node of a grid.
class FieldMap {
 public:
  FieldMap(GridPtr grid, Eigen::VectorXd values);

  static FieldMap zeros(GridPtr grid);

  /// Samples fn at every node; fn receives the node coordinates as an
  /// Eigen::VectorXd.
  template <class Fn>
  static FieldMap sample(GridPtr grid, Fn&& fn) {
    Eigen::VectorXd values(grid->size());
    for (Index i = 0; i < grid->size(); ++i) values(i) = fn(grid->point(i));
    return FieldMap(std::move(grid), std::move(values));
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator()(Index i) const { return values_(i); }
  Index size() const { return values_.size(); }

 private:
  GridPtr grid_;
  Eigen::VectorXd values_;
};

enum class Parity { cosine, sine };

/// Radial profile of one angular harmonic on a disk, sampled uniformly on
/// [0, outer_radius].
struct DiskSectorField {
  int harmonic = 0;
  Parity parity = Parity::cosine;
  double outer_radius = 0.0;
  Eigen::VectorXd radial;

  DiskSectorField(int m, Parity p, double r_out, Eigen::VectorXd samples);

  double radius(Index i) const;
};

struct GridPair {
  GridPtr dwell;
  GridPtr domain;
};

/// Domain [-L, L] and a dwell grid extended by 5 sigma_max on both sides, both
/// on the same lattice. If 2L is not a whole number of spacings the domain is
/// the largest centred lattice inside [-L, L].
GridPair make_interval_grids(double half_length, double sigma_max, double spacing);

/// Rectangle [-Lx, Lx] x [-Ly, Ly] with its dwell grid.
GridPair make_rectangle_grids(double half_x, double half_y, double sigma_max, double spacing);

/// Bunimovich stadium: a (2 width) x width rectangle capped by half-disks of
/// radius width/2, centred at the origin with its long axis along x. The
/// lattice is cell-centred (even node counts, cell edges on the symmetry axes)
/// and a cell is included iff its centre lies inside.
GridPtr make_stadium_mask(double width, double spacing);

/// Disk of the given radius centred at the origin, same rasterisation rule.
GridPtr make_disk_mask(double radius, double spacing);

/// Unmasked dwell lattice aligned with domain, extended by margin on all sides
/// (rounded up to whole cells).
GridPtr make_dwell_grid(const Grid& domain, double margin);

/// Discrete L2 inner product with the Riemann weights of the shared grid.
double weighted_inner(const FieldMap& u, const FieldMap& v);

template <class DerivedA, class DerivedB>
double weighted_inner(const Grid& grid, const Eigen::MatrixBase<DerivedA>& u,
                      const Eigen::MatrixBase<DerivedB>& v) {
  require(u.size() == grid.size() && v.size() == grid.size(),
          "weighted_inner: value count does not match grid");
  if (!grid.masked()) return grid.cell_measure() * u.dot(v);
  return grid.weights().dot(u.cwiseProduct(v));
}

double weighted_norm(const FieldMap& u);

}  // namespace ibf
