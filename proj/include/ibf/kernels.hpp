#pragma once

#include <Eigen/Dense>

#include "ibf/beams.hpp"
#include "ibf/core.hpp"

namespace ibf {

/// How the domain integral inside A*A is discretized.
///
/// lattice: Riemann sum over the domain nodes, so the matrix equals
///   Delta^n G^T W G with G_kj = f(y_k - x_j). This is exactly the normal
///   operator of the discrete forward map and makes left singular vectors
///   orthonormal to round-off.
/// continuous: the domain integral is taken as accurately as possible (erf
///   closed form for a 1D Gaussian on an interval, Gauss-Legendre panels on
///   unmasked boxes, Riemann sum on masked domains).
enum class KernelMeasure { lattice, continuous };

const char* to_string(KernelMeasure m) noexcept;
KernelMeasure parse_kernel_measure(const std::string& name);

struct AssemblyOptions {
  KernelMeasure measure = KernelMeasure::lattice;
  /// Largest accepted matrix side.
  Index max_side = 6000;
};

/// Discretized operator between two grids. For A*A on a dwell grid the entry
/// (i, j) is k(x_i, x_j) Delta^n, so that (values * t) samples A*A t.
struct KernelMatrix {
  GridPtr rows;
  GridPtr cols;
  Eigen::MatrixXd values;
  bool symmetric = false;
};

/// int_Omega f(x1 - x) f(x - x2) dx. Gauss-Legendre panels of width scale/2 on
/// unmasked domains, Riemann weights on masked ones.
double kstar_quadrature(const Beam& beam, const Grid& domain, const Eigen::Ref<const Eigen::VectorXd>& x1,
                        const Eigen::Ref<const Eigen::VectorXd>& x2);
double kstar_quadrature(const Beam& beam, const Grid& domain, double x1, double x2);

/// Closed form of the A*A kernel of a 1D Gaussian on [-L, L].
double kstar_gaussian_closed(double x1, double x2, double sigma, double L);

/// A*A assembled on the dwell grid. Throws resource_limit if the dwell grid
/// has more than opt.max_side nodes.
KernelMatrix assemble_AstarA(const Beam& beam, const GridPtr& dwell, const Grid& domain,
                             const AssemblyOptions& opt = {});

/// A_i* A_j on a shared dwell grid; same discretization rules as
/// assemble_AstarA (the erf cross kernel for two 1D Gaussians on an interval
/// under the continuous measure).
KernelMatrix assemble_cross(const Beam& beam_i, const Beam& beam_j, const GridPtr& dwell, const Grid& domain,
                            const AssemblyOptions& opt = {});

/// Matrix G with G_kj = f(y_k - x_j) for domain nodes y_k (all lattice nodes,
/// masked ones included) and dwell nodes x_j.
Eigen::MatrixXd forward_samples(const Beam& beam, const Grid& dwell, const Grid& domain);

/// Kernel of AA*: (f * f)(x1 - x2).
double kernel_AAstar(const Beam& beam, const Eigen::Ref<const Eigen::VectorXd>& x1,
                     const Eigen::Ref<const Eigen::VectorXd>& x2);

/// Lattice kernel sum_m (2 pi sigma^2)^-1 exp(-(x1 - m Delta)^2 / 2 sigma^2)
/// exp(-(m Delta - x2)^2 / 2 sigma^2), truncated once the remaining terms
/// fall below truncation_tol.
double theta_AAstar(double x1, double x2, double sigma, double spacing, double truncation_tol = 1e-17);

/// Radial kernel of the m-th angular harmonic of A*A for a 2D Gaussian on the
/// disk of radius R. The full kernel is k(x1, x2) = sum_m eps_m k_m(r1, r2)
/// cos(m (phi1 - phi2)) with eps_0 = 1/2 and eps_m = 1 for m >= 1.
double disk_sector_kernel(int m, double r1, double r2, double sigma, double R);

/// Series reconstruction of the full disk kernel from its harmonics.
double disk_kernel_series(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2, double sigma, double R,
                          int max_harmonic = -1);

/// Kernel of A_i* A_j for 1D Gaussians of widths sigma_i, sigma_j on [-L, L].
double crossbeam_kernel(double x1, double x2, double sigma_i, double sigma_j, double L);

}  // namespace ibf
