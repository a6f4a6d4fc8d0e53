#include "ibf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "ibf/quadrature.hpp"

namespace ibf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNegativeTolerance = 1e-8;

// Largest-magnitude entry positive; near-ties (1e-9 relative) go to the lowest index.
template <class Col>
void fix_sign(Col&& v) {
  const double peak = v.cwiseAbs().maxCoeff();
  if (peak == 0.0) return;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= peak * (1.0 - 1e-9)) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

GridPtr axis_grid(const Grid& g, Index d) { return std::make_shared<const Grid>(std::vector<Axis>{g.axis(d)}); }

}  // namespace

Index SpectralSystem::usable() const {
  Index n = 0;
  while (n < lambda.size() && lambda(n) > clamp_threshold) ++n;
  return n;
}

FieldMap SpectralSystem::right(Index n) const {
  require(n >= 0 && n < t.cols(), "spectral system: right vector index out of range");
  return FieldMap(dwell, t.col(n));
}

FieldMap SpectralSystem::left(Index n) const {
  require(n >= 0 && n < h.cols(), "spectral system: left vector " + std::to_string(n + 1) + " not available");
  return FieldMap(domain, h.col(n));
}

SpectralSystem decompose(const KernelMatrix& K) {
  require(K.symmetric && K.rows && K.rows == K.cols, "decompose: needs a symmetric same-grid kernel matrix");
  require(K.values.rows() == K.rows->size() && K.values.cols() == K.rows->size(),
          "decompose: matrix shape does not match grid");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K.values);
  if (es.info() != Eigen::Success) fail(ErrorKind::numeric_failure, "decompose: symmetric eigensolver failed");

  const Index n = K.values.rows();
  SpectralSystem sys;
  sys.dwell = K.rows;
  sys.lambda = es.eigenvalues().reverse();
  sys.t = es.eigenvectors().rowwise().reverse();
  const double top = n > 0 ? sys.lambda(0) : 0.0;
  if (n > 0 && sys.lambda(n - 1) < -kNegativeTolerance * std::max(top, 0.0)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "decompose: eigenvalue %.3e below -1e-8 times the largest (%.3e)",
                  sys.lambda(n - 1), top);
    fail(ErrorKind::assembly_inconsistency, buf);
  }
  sys.clamp_threshold = kEigenClamp * std::max(top, 0.0);
  for (Index i = 0; i < n; ++i)
    if (sys.lambda(i) < sys.clamp_threshold) sys.lambda(i) = 0.0;
  sys.t /= std::sqrt(K.rows->cell_measure());
  for (Index i = 0; i < n; ++i) fix_sign(sys.t.col(i));
  return sys;
}

Eigen::MatrixXd apply_forward(const Grid& dwell, const Eigen::MatrixXd& t, const Beam& beam, const Grid& grid) {
  require(t.rows() == dwell.size(), "apply_forward: dwell vector size does not match dwell grid");
  require(dwell.dimension() == beam.dimension() && grid.dimension() == beam.dimension(),
          "apply_forward: grid and beam dimensions differ");
  const double cell = dwell.cell_measure();
  if (beam.dimension() == 2 && beam.separable() && grid.aligned_with(dwell)) {
    // f(x, y) = g(x) g(y): the forward map is Gx T Gy^T on the reshaped field.
    const Beam g = beam.axis_factor();
    const Eigen::MatrixXd Gx = forward_samples(g, *axis_grid(dwell, 0), *axis_grid(grid, 0));
    const Eigen::MatrixXd Gy = forward_samples(g, *axis_grid(dwell, 1), *axis_grid(grid, 1));
    Eigen::MatrixXd out(grid.size(), t.cols());
    for (Index c = 0; c < t.cols(); ++c) {
      Eigen::Map<const Eigen::MatrixXd> T(t.col(c).data(), dwell.axis(0).count, dwell.axis(1).count);
      Eigen::MatrixXd R = Gx * T * Gy.transpose();
      out.col(c) = Eigen::Map<const Eigen::VectorXd>(R.data(), R.size()) * cell;
    }
    return out;
  }
  constexpr Index kMaxDenseEntries = 40'000'000;
  if (grid.size() * dwell.size() <= kMaxDenseEntries) return forward_samples(beam, dwell, grid) * t * cell;
  Eigen::MatrixXd out(grid.size(), t.cols());
  for (Index k = 0; k < grid.size(); ++k) {
    const Eigen::VectorXd y = grid.point(k);
    Eigen::RowVectorXd row(dwell.size());
    for (Index j = 0; j < dwell.size(); ++j) row(j) = eval(beam, y - dwell.point(j));
    out.row(k) = row * t * cell;
  }
  return out;
}

FieldMap apply_forward(const FieldMap& t, const Beam& beam, const GridPtr& grid) {
  require(grid != nullptr, "apply_forward: null grid");
  Eigen::MatrixXd v = apply_forward(t.grid(), t.values(), beam, *grid);
  return FieldMap(grid, v.col(0));
}

Eigen::VectorXd apply_forward(const FieldMap& t, const Beam& beam, const Eigen::MatrixXd& points) {
  const Grid& dwell = t.grid();
  require(points.cols() == beam.dimension(), "apply_forward: point dimension does not match beam");
  const double cell = dwell.cell_measure();
  Eigen::VectorXd out(points.rows());
  for (Index k = 0; k < points.rows(); ++k) {
    const Eigen::VectorXd y = points.row(k).transpose();
    double s = 0.0;
    for (Index j = 0; j < dwell.size(); ++j)
      if (t(j) != 0.0) s += t(j) * eval(beam, y - dwell.point(j));
    out(k) = s * cell;
  }
  return out;
}

SpectralSystem left_vectors(SpectralSystem sys, const Beam& beam, const GridPtr& domain, Index count) {
  require(domain != nullptr, "left_vectors: null domain grid");
  const Index usable = sys.usable();
  if (count < 0) count = usable;
  if (count > usable)
    fail(ErrorKind::invalid_argument, "left_vectors: mode " + std::to_string(count) +
                                          " requested but only " + std::to_string(usable) +
                                          " eigenvalues lie above the clamp");
  sys.domain = domain;
  sys.beam = beam;
  sys.h = apply_forward(*sys.dwell, sys.t.leftCols(count), beam, *domain);
  for (Index n = 0; n < count; ++n) sys.h.col(n) /= std::sqrt(sys.lambda(n));
  return sys;
}

SpectralSystem build_spectral_system(const Beam& beam, const GridPair& grids, const AssemblyOptions& opt,
                                     Index left_count) {
  const KernelMatrix K = assemble_AstarA(beam, grids.dwell, *grids.domain, opt);
  return left_vectors(decompose(K), beam, grids.domain, left_count);
}

std::vector<TensorMode> tensor_order_2d(const SpectralSystem& x, const SpectralSystem& y, Index N) {
  const Index nx = x.usable();
  const Index ny = y.usable();
  require(N >= 0 && N <= nx * ny, "tensor_order_2d: N exceeds the number of available mode pairs");
  std::vector<TensorMode> all;
  all.reserve(static_cast<std::size_t>(nx * ny));
  for (Index k = 0; k < nx; ++k)
    for (Index l = 0; l < ny; ++l) all.push_back({k, l, x.lambda(k) * y.lambda(l)});
  auto before = [](const TensorMode& a, const TensorMode& b) {
    if (a.lambda != b.lambda) return a.lambda > b.lambda;
    if (a.k + a.l != b.k + b.l) return a.k + a.l < b.k + b.l;
    return a.k < b.k;
  };
  std::partial_sort(all.begin(), all.begin() + N, all.end(), before);
  all.resize(static_cast<std::size_t>(N));
  return all;
}

Eigen::VectorXd TensorSystem::right(Index n) const {
  const TensorMode& m = modes.at(static_cast<std::size_t>(n));
  const Eigen::VectorXd tx = x.t.col(m.k);
  const Eigen::VectorXd ty = y.t.col(m.l);
  Eigen::VectorXd out(tx.size() * ty.size());
  for (Index iy = 0; iy < ty.size(); ++iy) out.segment(iy * tx.size(), tx.size()) = tx * ty(iy);
  return out;
}

Eigen::VectorXd TensorSystem::left(Index n) const {
  const TensorMode& m = modes.at(static_cast<std::size_t>(n));
  const Eigen::VectorXd hx = x.h.col(m.k);
  const Eigen::VectorXd hy = y.h.col(m.l);
  Eigen::VectorXd out(hx.size() * hy.size());
  for (Index iy = 0; iy < hy.size(); ++iy) out.segment(iy * hx.size(), hx.size()) = hx * hy(iy);
  return out;
}

double TensorSystem::left_at(Index n, Index node) const {
  const TensorMode& m = modes.at(static_cast<std::size_t>(n));
  const auto [ix, iy] = domain->lattice_coords(node);
  return x.h(ix, m.k) * y.h(iy, m.l);
}

TensorSystem build_tensor_system(const Beam& beam, const GridPair& grids, Index N, const AssemblyOptions& opt) {
  require(beam.dimension() == 2 && beam.separable(), "build_tensor_system: needs a separable 2D beam");
  require(grids.domain && !grids.domain->masked(), "build_tensor_system: needs an unmasked rectangle");
  const Beam g = beam.axis_factor();
  TensorSystem ts;
  ts.dwell = grids.dwell;
  ts.domain = grids.domain;
  GridPair gx{axis_grid(*grids.dwell, 0), axis_grid(*grids.domain, 0)};
  ts.x = build_spectral_system(g, gx, opt);
  GridPair gy{axis_grid(*grids.dwell, 1), axis_grid(*grids.domain, 1)};
  if (gy.dwell->same_as(*gx.dwell) && gy.domain->same_as(*gx.domain))
    ts.y = ts.x;
  else
    ts.y = build_spectral_system(g, gy, opt);
  ts.modes = tensor_order_2d(ts.x, ts.y, N);
  return ts;
}

ModeParity detect_parity(const FieldMap& v, double* asymmetry) {
  const Grid& g = v.grid();
  require(g.dimension() == 1 && g.centred(), "detect_parity: needs a centred 1D grid");
  const Eigen::VectorXd& a = v.values();
  const Eigen::VectorXd r = a.reverse();
  const double scale = std::max(a.norm(), 1e-300);
  const double odd_part = (a + r).norm() / (2.0 * scale);
  const double even_part = (a - r).norm() / (2.0 * scale);
  const ModeParity p = even_part <= odd_part ? ModeParity::even : ModeParity::odd;
  if (asymmetry) *asymmetry = std::min(even_part, odd_part);
  return p;
}

WavenumberFit fit_wavenumber(const FieldMap& v, ModeParity parity, double q, double L) {
  require(q > 0.0 && q < 1.0, "fit_wavenumber: q must lie in (0, 1)");
  require(L > 0.0, "fit_wavenumber: L must be positive");
  const Grid& g = v.grid();
  require(g.dimension() == 1, "fit_wavenumber: needs a 1D field");
  std::vector<double> xs, vs;
  for (Index i = 0; i < g.size(); ++i) {
    const double x = g.axis(0).point(i);
    if (std::abs(x) <= q * L * (1.0 + 1e-12)) {
      xs.push_back(x);
      vs.push_back(v(i));
    }
  }
  require(xs.size() >= 3, "fit_wavenumber: fewer than three samples in the fit window");
  const Eigen::Map<const Eigen::VectorXd> X(xs.data(), static_cast<Index>(xs.size()));
  const Eigen::Map<const Eigen::VectorXd> V(vs.data(), static_cast<Index>(vs.size()));
  const double vnorm = V.norm();
  const double a = X.cwiseAbs().maxCoeff();

  auto evaluate = [&](double k) {
    Eigen::VectorXd b = k * X;
    b = parity == ModeParity::even ? b.array().cos().eval() : b.array().sin().eval();
    const double bb = b.squaredNorm();
    WavenumberFit f{k, 0.0, 1.0};
    if (bb < 1e-300 || vnorm == 0.0) return f;
    f.amplitude = b.dot(V) / bb;
    f.residual = (V - f.amplitude * b).norm() / vnorm;
    return f;
  };

  if (vnorm == 0.0 || (V.maxCoeff() - V.minCoeff()) <= 1e-8 * V.cwiseAbs().maxCoeff()) return evaluate(0.0);

  int crossings = 0;
  double last = 0.0;
  for (double s : vs) {
    if (s == 0.0) continue;
    if (last != 0.0 && (s > 0.0) != (last > 0.0)) ++crossings;
    last = s;
  }
  const double unit = kPi / (2.0 * a);
  const double lo = std::max(0.0, (crossings - 2) * unit);
  const double hi = (crossings + 2) * unit;

  constexpr int kScan = 400;
  double best_k = lo;
  double best_r = evaluate(lo).residual;
  const double step = (hi - lo) / kScan;
  for (int i = 1; i <= kScan; ++i) {
    const double k = lo + i * step;
    const double r = evaluate(k).residual;
    if (r < best_r) best_r = r, best_k = k;
  }
  // Golden-section refinement around the scan minimum.
  double left = std::max(lo, best_k - step);
  double right = std::min(hi, best_k + step);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = right - phi * (right - left);
  double d = left + phi * (right - left);
  double fc = evaluate(c).residual;
  double fd = evaluate(d).residual;
  while (right - left > 1e-13 * std::max(1.0, right)) {
    if (fc < fd) {
      right = d;
      d = c;
      fd = fc;
      c = right - phi * (right - left);
      fc = evaluate(c).residual;
    } else {
      left = c;
      c = d;
      fc = fd;
      d = left + phi * (right - left);
      fd = evaluate(d).residual;
    }
  }
  WavenumberFit out = evaluate(0.5 * (left + right));
  const WavenumberFit scan = evaluate(best_k);
  return scan.residual < out.residual ? scan : out;
}

std::vector<DispersionRow> check_dispersion(const SpectralSystem& sys, double sigma, double q, double L,
                                            Index max_rows) {
  require(sigma > 0.0, "check_dispersion: sigma must be positive");
  std::vector<DispersionRow> rows;
  for (Index n = 0; n < sys.size() && sys.lambda(n) >= 1e-6; ++n) {
    if (max_rows >= 0 && static_cast<Index>(rows.size()) >= max_rows) break;
    const FieldMap tn = sys.right(n);
    DispersionRow row;
    row.n = n + 1;
    row.parity = detect_parity(tn);
    const WavenumberFit fit = fit_wavenumber(tn, row.parity, q, L);
    row.k = fit.k;
    row.fit_residual = fit.residual;
    row.lambda = sys.lambda(n);
    row.predicted = std::exp(-fit.k * fit.k * sigma * sigma);
    row.gap = std::abs(row.lambda - row.predicted) / row.lambda;
    rows.push_back(row);
  }
  return rows;
}

PlaneWaveResponse interior_plane_wave_response(double sigma, double L, double b, double x1) {
  require(sigma > 0.0 && L > 0.0, "interior_plane_wave_response: sigma and L must be positive");
  require(std::abs(x1) <= 0.9 * L, "interior_plane_wave_response: |x1| must not exceed 0.9 L");
  const double width = 0.5 * sigma;
  const double re = integrate_composite(
      [&](double x) { return kstar_gaussian_closed(x1, x, sigma, L) * std::cos(b * x); }, -L, L, width);
  const double im = integrate_composite(
      [&](double x) { return kstar_gaussian_closed(x1, x, sigma, L) * std::sin(b * x); }, -L, L, width);
  PlaneWaveResponse r;
  r.numeric = {re, im};
  r.predicted = std::exp(-b * b * sigma * sigma) * std::complex<double>(std::cos(b * x1), std::sin(b * x1));
  return r;
}

TraceCheck trace_and_hs_check(const KernelMatrix& K, const Beam& beam, const Grid& domain) {
  require(K.symmetric, "trace_and_hs_check: needs a symmetric kernel matrix");
  TraceCheck c;
  c.trace_sum = K.values.trace();
  c.hs_sum = K.values.squaredNorm();
  if (domain.included_count() == 0) return c;
  c.trace_predicted = domain.volume() * l2sq_norm(beam);

  auto g2 = [&](const Eigen::VectorXd& u) {
    const double g = autocorrelation(beam, u);
    return g * g;
  };
  const double width = 0.5 * beam.scale();
  if (domain.masked()) {
    // Riemann double sum; on a lattice the integrand depends on the offset only.
    const auto idx = domain.included_indices();
    const Index nx = domain.axis(0).count;
    const Index ny = domain.dimension() == 2 ? domain.axis(1).count : 1;
    Eigen::MatrixXd table(2 * nx - 1, 2 * ny - 1);
    Eigen::VectorXd u(domain.dimension());
    for (Index oy = 0; oy < 2 * ny - 1; ++oy)
      for (Index ox = 0; ox < 2 * nx - 1; ++ox) {
        u(0) = static_cast<double>(ox - (nx - 1)) * domain.axis(0).spacing;
        if (domain.dimension() == 2) u(1) = static_cast<double>(oy - (ny - 1)) * domain.axis(1).spacing;
        table(ox, oy) = g2(u);
      }
    double sum = 0.0;
    for (Index a : idx) {
      const auto [ax, ay] = domain.lattice_coords(a);
      for (Index b : idx) {
        const auto [bx, by] = domain.lattice_coords(b);
        sum += table(ax - bx + nx - 1, ay - by + ny - 1);
      }
    }
    const double w = domain.cell_measure();
    c.hs_predicted = sum * w * w;
    return c;
  }
  // Unmasked box: the double integral collapses to one over the offset u with
  // weight prod (W_d - |u_d|), W_d the side lengths.
  if (domain.dimension() == 1) {
    const double W = domain.axis(0).upper() - domain.axis(0).lower;
    Eigen::VectorXd u(1);
    c.hs_predicted = integrate_composite(
        [&](double s) {
          u(0) = s;
          return (W - std::abs(s)) * g2(u);
        },
        -W, W, width);
    return c;
  }
  const double Wx = domain.axis(0).upper() - domain.axis(0).lower;
  const double Wy = domain.axis(1).upper() - domain.axis(1).lower;
  Eigen::VectorXd u(2);
  c.hs_predicted = integrate_composite(
      [&](double sy) {
        return integrate_composite(
            [&](double sx) {
              u(0) = sx;
              u(1) = sy;
              return (Wx - std::abs(sx)) * (Wy - std::abs(sy)) * g2(u);
            },
            -Wx, Wx, width);
      },
      -Wy, Wy, width);
  return c;
}

double asymptotic_eigenvalue(const Beam& beam, const Eigen::Ref<const Eigen::VectorXd>& k) {
  return std::pow(2.0 * kPi, beam.dimension()) * fourier_magnitude_sq(beam, k);
}

double asymptotic_eigenvalue(const Beam& beam, double k) {
  Eigen::VectorXd p(1);
  p(0) = k;
  return asymptotic_eigenvalue(beam, p);
}

std::vector<DiskSectorMode> decompose_disk_sector(int m, Parity parity, double sigma, double R, int nodes,
                                                  int samples, Index count) {
  require(m >= 0, "decompose_disk_sector: harmonic index must be nonnegative");
  require(parity == Parity::cosine || m >= 1, "decompose_disk_sector: sine parity requires m >= 1");
  require(sigma > 0.0 && R > 0.0, "decompose_disk_sector: sigma and R must be positive");
  require(nodes >= 4 && samples >= 2, "decompose_disk_sector: too few nodes or samples");
  const GaussRule rule = gauss_legendre(nodes);
  Eigen::VectorXd r = 0.5 * R * (rule.nodes.array() + 1.0);
  Eigen::VectorXd w = 0.5 * R * rule.weights;
  const Eigen::VectorXd s = (w.array() * r.array()).sqrt();

  // Radial operator (K t)(r1) = pi int k_m(r1, r2) t(r2) r2 dr2, symmetrized.
  Eigen::MatrixXd S(nodes, nodes);
  for (int i = 0; i < nodes; ++i)
    for (int j = i; j < nodes; ++j) {
      const double v = kPi * s(i) * disk_sector_kernel(m, r(i), r(j), sigma, R) * s(j);
      S(i, j) = v;
      S(j, i) = v;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) fail(ErrorKind::numeric_failure, "decompose_disk_sector: eigensolver failed");
  const Eigen::VectorXd lam = es.eigenvalues().reverse();
  const Eigen::MatrixXd U = es.eigenvectors().rowwise().reverse();

  // Nystrom interpolation onto uniform radii.
  Eigen::MatrixXd P(samples, nodes);
  for (int a = 0; a < samples; ++a) {
    const double rho = R * a / (samples - 1.0);
    for (int j = 0; j < nodes; ++j) P(a, j) = kPi * disk_sector_kernel(m, rho, r(j), sigma, R) * w(j) * r(j);
  }
  const double angular = m == 0 ? 2.0 * kPi : kPi;
  std::vector<DiskSectorMode> out;
  count = std::min<Index>(count, nodes);
  for (Index n = 0; n < count && lam(n) > kEigenClamp * lam(0); ++n) {
    const Eigen::VectorXd tn = U.col(n).cwiseQuotient(s);  // unit int t^2 r dr
    Eigen::VectorXd prof = P * tn / lam(n) / std::sqrt(angular);
    fix_sign(prof);
    out.push_back({lam(n), DiskSectorField(m, parity, R, prof)});
  }
  return out;
}

std::vector<DecayRow> decay_diagnostics(const SpectralSystem& sys, Index n, double sigma, double L) {
  const Grid& g = *sys.dwell;
  require(g.dimension() == 1, "decay_diagnostics: needs a 1D system");
  require(n >= 0 && n < sys.t.cols(), "decay_diagnostics: mode index out of range");
  std::vector<DecayRow> rows;
  const Axis& a = g.axis(0);
  for (int j = 1; j <= 4; ++j) {
    const double target = L + j * sigma;
    const Index i = static_cast<Index>(std::llround((target - a.lower) / a.spacing));
    if (i < 0 || i >= a.count) continue;
    DecayRow row;
    row.x = a.point(i);
    const double d = row.x - L;
    row.value = sys.t(i, n);
    row.model = std::exp(-d * d / (2.0 * sigma * sigma)) / d;
    row.ratio = row.model != 0.0 ? row.value / row.model : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ibf
