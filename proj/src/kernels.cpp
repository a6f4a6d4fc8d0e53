#include "ibf/kernels.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ibf/quadrature.hpp"
#include "ibf/special.hpp"

namespace ibf {

namespace {

constexpr double kPi = std::numbers::pi;

void check_dims(const Beam& beam, const Grid& dwell, const Grid& domain) {
  require(dwell.dimension() == beam.dimension() && domain.dimension() == beam.dimension(),
          "kernel assembly: grid and beam dimensions differ");
}

void check_side(Index side, const AssemblyOptions& opt) {
  if (side > opt.max_side)
    fail(ErrorKind::resource_limit, "kernel assembly: matrix side " + std::to_string(side) + " exceeds the cap of " +
                                        std::to_string(opt.max_side));
}

// Gaussian A*A kernel on [a, b]; the closed form shifted to the interval centre.
double gaussian_interval(double x1, double x2, double sigma, double a, double b) {
  const double c = 0.5 * (a + b);
  return kstar_gaussian_closed(x1 - c, x2 - c, sigma, 0.5 * (b - a));
}

double cross_interval(double x1, double x2, double si, double sj, double a, double b) {
  const double c = 0.5 * (a + b);
  return crossbeam_kernel(x1 - c, x2 - c, si, sj, 0.5 * (b - a));
}

bool is_gaussian_1d(const Beam& beam) { return beam.family() == BeamFamily::gaussian && beam.dimension() == 1; }

// Rows of G restricted to the included domain nodes, plus their weights.
struct WeightedSamples {
  Eigen::MatrixXd G;
  Eigen::VectorXd w;
};

WeightedSamples included_samples(const Beam& beam, const Grid& dwell, const Grid& domain) {
  const auto idx = domain.included_indices();
  const Eigen::MatrixXd full = forward_samples(beam, dwell, domain);
  WeightedSamples out{Eigen::MatrixXd(static_cast<Index>(idx.size()), dwell.size()),
                      Eigen::VectorXd::Constant(static_cast<Index>(idx.size()), domain.cell_measure())};
  for (std::size_t r = 0; r < idx.size(); ++r) out.G.row(static_cast<Index>(r)) = full.row(idx[r]);
  return out;
}

KernelMatrix lattice_cross(const Beam& bi, const Beam& bj, const GridPtr& dwell, const Grid& domain) {
  KernelMatrix K{dwell, dwell, Eigen::MatrixXd::Zero(dwell->size(), dwell->size()), false};
  if (domain.included_count() == 0) {
    K.symmetric = bi == bj;
    return K;
  }
  const WeightedSamples si = included_samples(bi, *dwell, domain);
  const double cell = dwell->cell_measure();
  if (bi == bj) {
    K.values.noalias() = si.G.transpose() * si.w.asDiagonal() * si.G;
    K.values = 0.5 * (K.values + K.values.transpose()).eval();
    K.values *= cell;
    K.symmetric = true;
  } else {
    const WeightedSamples sj = included_samples(bj, *dwell, domain);
    K.values.noalias() = si.G.transpose() * si.w.asDiagonal() * sj.G;
    K.values *= cell;
  }
  return K;
}

template <class Entry>
KernelMatrix tabulate(const GridPtr& dwell, bool symmetric, Entry&& entry) {
  const Index n = dwell->size();
  KernelMatrix K{dwell, dwell, Eigen::MatrixXd(n, n), symmetric};
  const double cell = dwell->cell_measure();
  for (Index j = 0; j < n; ++j) {
    const Eigen::VectorXd xj = dwell->point(j);
    for (Index i = symmetric ? j : 0; i < n; ++i) {
      const double v = entry(dwell->point(i), xj) * cell;
      K.values(i, j) = v;
      if (symmetric) K.values(j, i) = v;
    }
  }
  return K;
}

}  // namespace

const char* to_string(KernelMeasure m) noexcept { return m == KernelMeasure::lattice ? "lattice" : "continuous"; }

KernelMeasure parse_kernel_measure(const std::string& name) {
  if (name == "lattice") return KernelMeasure::lattice;
  if (name == "continuous") return KernelMeasure::continuous;
  fail(ErrorKind::invalid_argument, "unknown kernel measure '" + name + "'");
}

double kstar_gaussian_closed(double x1, double x2, double sigma, double L) {
  const double d = x1 - x2;
  const double s = x1 + x2;
  return 0.5 / std::sqrt(4.0 * kPi * sigma * sigma) * std::exp(-d * d / (4.0 * sigma * sigma)) *
         (std::erf((s + 2.0 * L) / (2.0 * sigma)) - std::erf((s - 2.0 * L) / (2.0 * sigma)));
}

double crossbeam_kernel(double x1, double x2, double si, double sj, double L) {
  if (si == sj) return kstar_gaussian_closed(x1, x2, si, L);
  const double si2 = si * si;
  const double sj2 = sj * sj;
  const double v = si2 + sj2;
  const double d = x1 - x2;
  const double den = si * sj * std::sqrt(2.0 * v);
  const double upper = ((x1 + L) * sj2 + (x2 + L) * si2) / den;
  const double lower = ((x1 - L) * sj2 + (x2 - L) * si2) / den;
  return std::exp(-d * d / (2.0 * v)) / std::sqrt(2.0 * kPi * v) * 0.5 * (std::erf(upper) - std::erf(lower));
}

double kstar_quadrature(const Beam& beam, const Grid& domain, const Eigen::Ref<const Eigen::VectorXd>& x1,
                        const Eigen::Ref<const Eigen::VectorXd>& x2) {
  require(domain.dimension() == beam.dimension(), "kstar_quadrature: grid and beam dimensions differ");
  require(x1.size() == beam.dimension() && x2.size() == beam.dimension(),
          "kstar_quadrature: point dimension does not match beam");
  if (domain.masked()) {
    double sum = 0.0;
    for (Index k : domain.included_indices()) {
      const Eigen::VectorXd y = domain.point(k);
      sum += eval(beam, x1 - y) * eval(beam, y - x2);
    }
    return sum * domain.cell_measure();
  }
  const double width = 0.5 * beam.scale();
  if (beam.dimension() == 1) {
    const Axis& a = domain.axis(0);
    Eigen::VectorXd y(1);
    return integrate_composite(
        [&](double t) {
          y(0) = t;
          return eval(beam, x1 - y) * eval(beam, y - x2);
        },
        a.lower, a.upper(), width);
  }
  const Axis& ax = domain.axis(0);
  const Axis& ay = domain.axis(1);
  Eigen::VectorXd y(2);
  return integrate_composite(
      [&](double ty) {
        y(1) = ty;
        return integrate_composite(
            [&](double tx) {
              y(0) = tx;
              return eval(beam, x1 - y) * eval(beam, y - x2);
            },
            ax.lower, ax.upper(), width);
      },
      ay.lower, ay.upper(), width);
}

double kstar_quadrature(const Beam& beam, const Grid& domain, double x1, double x2) {
  Eigen::VectorXd p1(1), p2(1);
  p1(0) = x1;
  p2(0) = x2;
  return kstar_quadrature(beam, domain, p1, p2);
}

Eigen::MatrixXd forward_samples(const Beam& beam, const Grid& dwell, const Grid& domain) {
  check_dims(beam, dwell, domain);
  const Index nk = domain.size();
  const Index nj = dwell.size();
  Eigen::MatrixXd G(nk, nj);
  if (!domain.aligned_with(dwell)) {
    for (Index j = 0; j < nj; ++j) {
      const Eigen::VectorXd xj = dwell.point(j);
      for (Index k = 0; k < nk; ++k) G(k, j) = eval(beam, domain.point(k) - xj);
    }
    return G;
  }
  // Aligned lattices: y_k - x_j is a whole number of spacings per axis, so f is
  // tabulated once per offset.
  const Index dim = beam.dimension();
  Index shift[2] = {0, 0}, lo[2] = {0, 0}, span[2] = {1, 1};
  for (Index d = 0; d < dim; ++d) {
    const Axis& ad = dwell.axis(d);
    const Axis& ak = domain.axis(d);
    shift[d] = static_cast<Index>(std::llround((ak.lower - ad.lower) / ad.spacing));
    lo[d] = shift[d] - (ad.count - 1);
    span[d] = ak.count + ad.count - 1;
  }
  Eigen::MatrixXd table(span[0], span[1]);
  Eigen::VectorXd off(dim);
  for (Index oy = 0; oy < span[1]; ++oy)
    for (Index ox = 0; ox < span[0]; ++ox) {
      off(0) = static_cast<double>(lo[0] + ox) * dwell.axis(0).spacing;
      if (dim == 2) off(1) = static_cast<double>(lo[1] + oy) * dwell.axis(1).spacing;
      table(ox, oy) = eval(beam, off);
    }
  for (Index j = 0; j < nj; ++j) {
    const auto [jx, jy] = dwell.lattice_coords(j);
    for (Index k = 0; k < nk; ++k) {
      const auto [kx, ky] = domain.lattice_coords(k);
      const Index ox = shift[0] + kx - jx - lo[0];
      const Index oy = dim == 2 ? shift[1] + ky - jy - lo[1] : 0;
      G(k, j) = table(ox, oy);
    }
  }
  return G;
}

KernelMatrix assemble_AstarA(const Beam& beam, const GridPtr& dwell, const Grid& domain, const AssemblyOptions& opt) {
  return assemble_cross(beam, beam, dwell, domain, opt);
}

KernelMatrix assemble_cross(const Beam& bi, const Beam& bj, const GridPtr& dwell, const Grid& domain,
                            const AssemblyOptions& opt) {
  require(dwell != nullptr, "kernel assembly: null dwell grid");
  require(bi.dimension() == bj.dimension(), "kernel assembly: beams differ in dimension");
  check_dims(bi, *dwell, domain);
  check_side(dwell->size(), opt);
  if (opt.measure == KernelMeasure::lattice || domain.masked()) return lattice_cross(bi, bj, dwell, domain);

  const bool same = bi == bj;
  if (is_gaussian_1d(bi) && is_gaussian_1d(bj)) {
    const double a = domain.axis(0).lower;
    const double b = domain.axis(0).upper();
    const double si = bi.sigma(), sj = bj.sigma();
    if (same)
      return tabulate(dwell, true, [&](const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
        return gaussian_interval(p(0), q(0), si, a, b);
      });
    return tabulate(dwell, false, [&](const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
      return cross_interval(p(0), q(0), si, sj, a, b);
    });
  }
  if (same)
    return tabulate(dwell, true, [&](const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
      return kstar_quadrature(bi, domain, p, q);
    });
  // Cross kernels of other families: integrate f_i(p - y) f_j(y - q) directly.
  const double width = 0.5 * std::min(bi.scale(), bj.scale());
  return tabulate(dwell, false, [&](const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    require(bi.dimension() == 1, "kernel assembly: continuous cross kernels need 1D beams; use the lattice measure");
    Eigen::VectorXd y(1);
    return integrate_composite(
        [&](double t) {
          y(0) = t;
          return eval(bi, p - y) * eval(bj, y - q);
        },
        domain.axis(0).lower, domain.axis(0).upper(), width);
  });
}

double kernel_AAstar(const Beam& beam, const Eigen::Ref<const Eigen::VectorXd>& x1,
                     const Eigen::Ref<const Eigen::VectorXd>& x2) {
  require(x1.size() == x2.size(), "kernel_AAstar: point dimensions differ");
  return autocorrelation(beam, x1 - x2);
}

double theta_AAstar(double x1, double x2, double sigma, double spacing, double truncation_tol) {
  require(sigma > 0.0 && spacing > 0.0, "theta_AAstar: sigma and spacing must be positive");
  const double s2 = 2.0 * sigma * sigma;
  const double pref = 1.0 / (kPi * s2);
  auto term = [&](double m) {
    const double u = x1 - spacing * m;
    const double v = spacing * m - x2;
    return pref * std::exp(-(u * u + v * v) / s2);
  };
  // Terms are unimodal in m with the peak at m = (x1 + x2) / (2 Delta).
  const double m0 = std::round(0.5 * (x1 + x2) / spacing);
  double sum = term(m0);
  for (int dir : {-1, 1}) {
    for (double m = m0 + dir;; m += dir) {
      const double t = term(m);
      sum += t;
      // Beyond the peak consecutive ratios shrink, so the tail is bounded by
      // t r / (1 - r) with r the current ratio.
      const double r = term(m + dir) / std::max(t, 1e-300);
      if (t == 0.0 || (r < 1.0 && t * r / (1.0 - r) < truncation_tol)) break;
    }
  }
  return sum;
}

double disk_sector_kernel(int m, double r1, double r2, double sigma, double R) {
  require(m >= 0, "disk_sector_kernel: harmonic index must be nonnegative");
  require(r1 >= 0.0 && r2 >= 0.0, "disk_sector_kernel: radii must be nonnegative");
  require(sigma > 0.0 && R > 0.0, "disk_sector_kernel: sigma and R must be positive");
  const double s2 = sigma * sigma;
  auto integrand = [&](double r) {
    const double a = r - r1;
    const double b = r - r2;
    return bessel_i_scaled(m, r * r1 / s2) * bessel_i_scaled(m, r * r2 / s2) * std::exp(-(a * a + b * b) / (2.0 * s2)) *
           r;
  };
  QuadOptions opt;
  opt.abs_tol = 1e-30;
  opt.rel_tol = 1e-13;
  // Panels of width sigma/2 seed the adaptive rule so narrow peaks are seen.
  const int panels = std::max(1, static_cast<int>(std::ceil(R / (0.5 * sigma))));
  double sum = 0.0;
  for (int p = 0; p < panels; ++p)
    sum += integrate_adaptive(integrand, R * p / panels, R * (p + 1) / panels, opt).value;
  return sum / (kPi * s2 * s2);
}

double disk_kernel_series(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2, double sigma, double R,
                          int max_harmonic) {
  const double r1 = x1.norm();
  const double r2 = x2.norm();
  const double dphi = std::atan2(x1.y(), x1.x()) - std::atan2(x2.y(), x2.x());
  if (max_harmonic < 0) max_harmonic = 30 + static_cast<int>(std::ceil(2.0 * R * std::max(r1, r2) / (sigma * sigma)));
  double sum = 0.5 * disk_sector_kernel(0, r1, r2, sigma, R);
  if (r1 == 0.0 || r2 == 0.0) return sum;
  int small = 0;
  for (int m = 1; m <= max_harmonic; ++m) {
    const double k = disk_sector_kernel(m, r1, r2, sigma, R);
    sum += k * std::cos(m * dphi);
    small = std::abs(k) < 1e-18 * std::abs(sum) ? small + 1 : 0;
    if (small >= 3) break;
  }
  return sum;
}

}  // namespace ibf
