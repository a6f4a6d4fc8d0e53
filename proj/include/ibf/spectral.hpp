#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <vector>

#include "ibf/beams.hpp"
#include "ibf/core.hpp"
#include "ibf/kernels.hpp"

namespace ibf {

/// Singular system of the forward map. Mode n (1-based in the literature) is
/// column n - 1 everywhere below.
///
/// Right vectors are normalized with the dwell weights, left vectors with the
/// domain weights. Left vectors exist only for the first left_count() modes.
struct SpectralSystem {
  GridPtr dwell;
  GridPtr domain;
  std::optional<Beam> beam;  // set once left vectors are built
  Eigen::VectorXd lambda;    // descending, clamped at zero
  Eigen::MatrixXd t;       // dwell nodes x modes
  Eigen::MatrixXd h;       // domain nodes x left_count()
  double clamp_threshold = 0.0;

  Index size() const { return lambda.size(); }
  /// Modes with lambda above the clamp threshold.
  Index usable() const;
  Index left_count() const { return h.cols(); }
  FieldMap right(Index n) const;
  FieldMap left(Index n) const;
};

/// Relative clamp: eigenvalues below this fraction of the largest are zero.
inline constexpr double kEigenClamp = 1e-12;

/// Dense symmetric eigendecomposition of a same-grid kernel matrix.
SpectralSystem decompose(const KernelMatrix& K);

/// Adds h_n = A t_n / sqrt(lambda_n) for the first count modes (all usable
/// modes when count < 0). Throws invalid_argument if a requested mode is
/// clamped.
SpectralSystem left_vectors(SpectralSystem sys, const Beam& beam, const GridPtr& domain, Index count = -1);

/// Riemann convolution Delta^n sum_j t_j f(x - x_j) on every node of grid.
FieldMap apply_forward(const FieldMap& t, const Beam& beam, const GridPtr& grid);
/// The same at arbitrary points (rows of points).
Eigen::VectorXd apply_forward(const FieldMap& t, const Beam& beam, const Eigen::MatrixXd& points);
/// Column-wise forward map of several dwell vectors at once.
Eigen::MatrixXd apply_forward(const Grid& dwell, const Eigen::MatrixXd& t, const Beam& beam, const Grid& grid);

/// Convenience: assemble, decompose and build left vectors.
SpectralSystem build_spectral_system(const Beam& beam, const GridPair& grids, const AssemblyOptions& opt = {},
                                     Index left_count = -1);

struct TensorMode {
  Index k = 0;  // column in the x system
  Index l = 0;  // column in the y system
  double lambda = 0.0;
};

/// Top-N products lambda_k lambda_l, descending; ties broken by k + l, then k.
std::vector<TensorMode> tensor_order_2d(const SpectralSystem& x, const SpectralSystem& y, Index N);

/// Singular system of a separable beam on a rectangle as the tensor product
/// of two one-dimensional systems.
struct TensorSystem {
  SpectralSystem x;
  SpectralSystem y;
  std::vector<TensorMode> modes;
  GridPtr dwell;   // 2D
  GridPtr domain;  // 2D

  Index size() const { return static_cast<Index>(modes.size()); }
  /// Mode values on the 2D grids, x-fastest.
  Eigen::VectorXd right(Index n) const;
  Eigen::VectorXd left(Index n) const;
  /// Left vector n at one domain node (flat index).
  double left_at(Index n, Index domain_node) const;
};

/// Builds the tensor system for a separable 2D beam on an unmasked rectangle.
TensorSystem build_tensor_system(const Beam& beam, const GridPair& grids, Index N,
                                 const AssemblyOptions& opt = {});

enum class ModeParity { even, odd };

/// Parity of a vector on a centred 1D grid, by comparing v(x) with v(-x).
ModeParity detect_parity(const FieldMap& v, double* asymmetry = nullptr);

struct WavenumberFit {
  double k = 0.0;
  double amplitude = 0.0;
  double residual = 0.0;  // relative L2 misfit over the fit window
};

/// Least-squares fit of a cos(kx) (even) or a sin(kx) (odd) to v on
/// [-qL, qL]. The starting bracket comes from the zero-crossing count.
WavenumberFit fit_wavenumber(const FieldMap& v, ModeParity parity, double q, double L);

struct DispersionRow {
  Index n = 0;  // 1-based mode number
  ModeParity parity = ModeParity::even;
  double k = 0.0;
  double lambda = 0.0;
  double predicted = 0.0;  // exp(-k^2 sigma^2)
  double gap = 0.0;        // |lambda - predicted| / lambda
  double fit_residual = 0.0;
};

/// One row per mode with lambda >= 1e-6 (at most max_rows rows when positive).
std::vector<DispersionRow> check_dispersion(const SpectralSystem& sys, double sigma, double q, double L,
                                            Index max_rows = -1);

struct PlaneWaveResponse {
  std::complex<double> numeric;
  std::complex<double> predicted;
};

/// int_{-L}^{L} k(x1, x) exp(i b x) dx against exp(-b^2 sigma^2) exp(i b x1).
/// Requires |x1| <= 0.9 L.
PlaneWaveResponse interior_plane_wave_response(double sigma, double L, double b, double x1);

struct TraceCheck {
  double trace_sum = 0.0;
  double trace_predicted = 0.0;
  double hs_sum = 0.0;
  double hs_predicted = 0.0;
};

/// Trace and Hilbert-Schmidt norm of K against Vol(Omega) ||f||^2 and the
/// double integral of (f * f)^2 over Omega x Omega.
TraceCheck trace_and_hs_check(const KernelMatrix& K, const Beam& beam, const Grid& domain);

/// (2 pi)^n |Ff(k)|^2, the limiting eigenvalue for wavevector k.
double asymptotic_eigenvalue(const Beam& beam, const Eigen::Ref<const Eigen::VectorXd>& k);
double asymptotic_eigenvalue(const Beam& beam, double k);

struct DiskSectorMode {
  double lambda = 0.0;
  DiskSectorField field;
};

/// Eigenpairs of A*A restricted to angular harmonic m on the disk of radius R
/// (2D Gaussian of width sigma), by Nystrom discretization on nodes Gauss
/// points. Radial profiles are normalized to unit 2D L2 norm and returned on
/// samples uniform points.
std::vector<DiskSectorMode> decompose_disk_sector(int m, Parity parity, double sigma, double R, int nodes = 64,
                                                  int samples = 101, Index count = 10);

struct DecayRow {
  double x = 0.0;
  double value = 0.0;
  double model = 0.0;  // (x - L)^-1 exp(-(x - L)^2 / (2 sigma^2))
  double ratio = 0.0;
};

/// Outside-domain decay of mode n against the conjectured tail shape, sampled
/// at x = L + j sigma, j = 1..4. Diagnostic only.
std::vector<DecayRow> decay_diagnostics(const SpectralSystem& sys, Index n, double sigma, double L);

}  // namespace ibf
