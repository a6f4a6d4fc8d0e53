#include "ibf/core.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ibf {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::numeric_failure: return "numeric-failure";
    case ErrorKind::unsupported_for_family: return "unsupported-for-family";
    case ErrorKind::resource_limit: return "resource-limit";
    case ErrorKind::assembly_inconsistency: return "assembly-inconsistency";
    case ErrorKind::convergence_failure: return "convergence-failure";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::usage: return "usage";
  }
  return "unknown";
}

namespace {

constexpr double kLatticeTol = 1e-9;

void check_axes(const std::vector<Axis>& axes) {
  require(axes.size() == 1 || axes.size() == 2, "grid: only 1D and 2D lattices are supported");
  for (const auto& a : axes) {
    require(a.count >= 1, "grid: axis needs at least one node");
    require(a.spacing > 0.0 && std::isfinite(a.spacing), "grid: spacing must be positive");
    require(std::isfinite(a.lower), "grid: axis origin must be finite");
  }
}

Index product_size(const std::vector<Axis>& axes) {
  Index n = 1;
  for (const auto& a : axes) n *= a.count;
  return n;
}

// Centred lattice with the given spacing and node count.
Axis centred_axis(Index count, double spacing) {
  return Axis{-0.5 * spacing * static_cast<double>(count - 1), spacing, count};
}

Index cells_spanning(double length, double spacing) {
  return static_cast<Index>(std::floor(length / spacing + kLatticeTol));
}

}  // namespace

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  check_axes(axes_);
  size_ = product_size(axes_);
  included_ = size_;
}

Grid::Grid(std::vector<Axis> axes, std::vector<std::uint8_t> mask)
    : axes_(std::move(axes)), mask_(std::move(mask)) {
  check_axes(axes_);
  size_ = product_size(axes_);
  require(static_cast<Index>(mask_.size()) == size_, "grid: mask size does not match lattice");
  included_ = 0;
  for (auto m : mask_) included_ += (m != 0);
}

double Grid::cell_measure() const {
  double m = 1.0;
  for (const auto& a : axes_) m *= a.spacing;
  return m;
}

double Grid::volume() const {
  if (masked()) return static_cast<double>(included_) * cell_measure();
  double v = 1.0;
  for (const auto& a : axes_) v *= a.upper() - a.lower;
  return v;
}

Eigen::VectorXd Grid::weights() const {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(size_, cell_measure());
  if (masked()) {
    for (Index i = 0; i < size_; ++i)
      if (!included(i)) w(i) = 0.0;
  }
  return w;
}

std::pair<Index, Index> Grid::lattice_coords(Index i) const {
  const Index nx = axes_[0].count;
  return {i % nx, i / nx};
}

Eigen::VectorXd Grid::point(Index i) const {
  Eigen::VectorXd p(dimension());
  const auto [ix, iy] = lattice_coords(i);
  p(0) = axes_[0].point(ix);
  if (dimension() == 2) p(1) = axes_[1].point(iy);
  return p;
}

Eigen::MatrixXd Grid::points() const {
  Eigen::MatrixXd p(size_, dimension());
  for (Index i = 0; i < size_; ++i) p.row(i) = point(i).transpose();
  return p;
}

std::vector<Index> Grid::included_indices() const {
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(included_));
  for (Index i = 0; i < size_; ++i)
    if (included(i)) idx.push_back(i);
  return idx;
}

Eigen::MatrixXd Grid::included_points() const {
  const auto idx = included_indices();
  Eigen::MatrixXd p(static_cast<Index>(idx.size()), dimension());
  for (std::size_t r = 0; r < idx.size(); ++r) p.row(static_cast<Index>(r)) = point(idx[r]).transpose();
  return p;
}

bool Grid::same_as(const Grid& other) const {
  if (this == &other) return true;
  if (dimension() != other.dimension() || mask_ != other.mask_) return false;
  for (Index d = 0; d < dimension(); ++d) {
    const Axis& a = axis(d);
    const Axis& b = other.axis(d);
    const double tol = kLatticeTol * a.spacing;
    if (a.count != b.count || std::abs(a.spacing - b.spacing) > tol || std::abs(a.lower - b.lower) > tol)
      return false;
  }
  return true;
}

bool Grid::aligned_with(const Grid& other) const {
  if (dimension() != other.dimension()) return false;
  for (Index d = 0; d < dimension(); ++d) {
    const Axis& a = axis(d);
    const Axis& b = other.axis(d);
    if (std::abs(a.spacing - b.spacing) > kLatticeTol * a.spacing) return false;
    const double shift = (a.lower - b.lower) / a.spacing;
    if (std::abs(shift - std::round(shift)) > 1e-6) return false;
  }
  return true;
}

bool Grid::covers(const Grid& other) const {
  if (dimension() != other.dimension()) return false;
  for (Index d = 0; d < dimension(); ++d) {
    const double tol = kLatticeTol * axis(d).spacing;
    if (axis(d).lower > other.axis(d).lower + tol || axis(d).upper() < other.axis(d).upper() - tol) return false;
  }
  return true;
}

bool Grid::centred() const {
  for (const auto& a : axes_)
    if (std::abs(a.lower + a.upper()) > kLatticeTol * a.spacing) return false;
  return true;
}

FieldMap::FieldMap(GridPtr grid, Eigen::VectorXd values) : grid_(std::move(grid)), values_(std::move(values)) {
  require(grid_ != nullptr, "field map: null grid");
  require(values_.size() == grid_->size(), "field map: value count does not match grid point count");
  require(values_.allFinite(), "field map: values must be finite");
}

FieldMap FieldMap::zeros(GridPtr grid) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(grid->size());
  return FieldMap(std::move(grid), std::move(v));
}

DiskSectorField::DiskSectorField(int m, Parity p, double r_out, Eigen::VectorXd samples)
    : harmonic(m), parity(p), outer_radius(r_out), radial(std::move(samples)) {
  require(m >= 0, "disk sector: harmonic index must be nonnegative");
  require(p == Parity::cosine || m >= 1, "disk sector: sine parity requires harmonic >= 1");
  require(r_out > 0.0, "disk sector: outer radius must be positive");
  require(radial.size() >= 2, "disk sector: need at least two radial samples");
  require(radial.allFinite(), "disk sector: radial samples must be finite");
}

double DiskSectorField::radius(Index i) const {
  return outer_radius * static_cast<double>(i) / static_cast<double>(radial.size() - 1);
}

GridPtr make_dwell_grid(const Grid& domain, double margin) {
  require(margin >= 0.0 && std::isfinite(margin), "dwell grid: margin must be nonnegative");
  std::vector<Axis> axes;
  for (const auto& a : domain.axes()) {
    const Index extra = static_cast<Index>(std::ceil(margin / a.spacing - kLatticeTol));
    axes.push_back(Axis{a.lower - a.spacing * static_cast<double>(extra), a.spacing, a.count + 2 * extra});
  }
  return std::make_shared<const Grid>(std::move(axes));
}

GridPair make_interval_grids(double half_length, double sigma_max, double spacing) {
  require(half_length > 0.0, "make_interval_grids: L must be positive");
  require(sigma_max > 0.0, "make_interval_grids: sigma_max must be positive");
  require(spacing > 0.0, "make_interval_grids: spacing must be positive");
  require(spacing <= sigma_max, "make_interval_grids: spacing must not exceed sigma_max");
  const Index cells = cells_spanning(2.0 * half_length, spacing);
  auto domain = std::make_shared<const Grid>(std::vector<Axis>{centred_axis(cells + 1, spacing)});
  auto dwell = make_dwell_grid(*domain, kDwellMarginScales * sigma_max);
  return {dwell, domain};
}

GridPair make_rectangle_grids(double half_x, double half_y, double sigma_max, double spacing) {
  require(half_x > 0.0 && half_y > 0.0, "make_rectangle_grids: half lengths must be positive");
  require(sigma_max > 0.0, "make_rectangle_grids: sigma_max must be positive");
  require(spacing > 0.0 && spacing <= sigma_max, "make_rectangle_grids: need 0 < spacing <= sigma_max");
  std::vector<Axis> axes{centred_axis(cells_spanning(2.0 * half_x, spacing) + 1, spacing),
                         centred_axis(cells_spanning(2.0 * half_y, spacing) + 1, spacing)};
  auto domain = std::make_shared<const Grid>(std::move(axes));
  auto dwell = make_dwell_grid(*domain, kDwellMarginScales * sigma_max);
  return {dwell, domain};
}

namespace {

template <class Inside>
GridPtr rasterise(double half_x, double half_y, double spacing, Inside&& inside) {
  // Cell-centred lattice: cell edges fall on the straight parts of the boundary.
  auto axis_for = [spacing](double half) {
    const Index n = 2 * static_cast<Index>(std::ceil(half / spacing - kLatticeTol));
    return centred_axis(n, spacing);
  };
  std::vector<Axis> axes{axis_for(half_x), axis_for(half_y)};
  const Index nx = axes[0].count;
  const Index ny = axes[1].count;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(nx * ny), 0);
  for (Index iy = 0; iy < ny; ++iy)
    for (Index ix = 0; ix < nx; ++ix)
      mask[static_cast<std::size_t>(ix + nx * iy)] = inside(axes[0].point(ix), axes[1].point(iy)) ? 1 : 0;
  return std::make_shared<const Grid>(std::move(axes), std::move(mask));
}

}  // namespace

GridPtr make_stadium_mask(double width, double spacing) {
  require(width > 0.0, "make_stadium_mask: width must be positive");
  require(spacing > 0.0, "make_stadium_mask: spacing must be positive");
  const double r = 0.5 * width;
  return rasterise(1.5 * width, r, spacing, [width, r](double x, double y) {
    const double ax = std::abs(x);
    if (std::abs(y) > r) return false;
    if (ax <= width) return true;
    const double dx = ax - width;
    return dx * dx + y * y <= r * r;
  });
}

GridPtr make_disk_mask(double radius, double spacing) {
  require(radius > 0.0, "make_disk_mask: radius must be positive");
  require(spacing > 0.0, "make_disk_mask: spacing must be positive");
  return rasterise(radius, radius, spacing,
                   [radius](double x, double y) { return x * x + y * y <= radius * radius; });
}

double weighted_inner(const FieldMap& u, const FieldMap& v) {
  require(u.grid().same_as(v.grid()), "weighted_inner: fields live on different grids");
  return weighted_inner(u.grid(), u.values(), v.values());
}

double weighted_norm(const FieldMap& u) { return std::sqrt(std::max(0.0, weighted_inner(u, u))); }

}  // namespace ibf
