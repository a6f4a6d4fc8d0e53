#include "ibf/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace ibf {

namespace {

constexpr double kPi = std::numbers::pi;

// Node index of x on the grid when x sits on a lattice node, -1 otherwise.
Index node_of(const Grid& g, const Eigen::Ref<const Eigen::VectorXd>& x, bool* inside) {
  Index ix[2] = {0, 0};
  bool on_node = true;
  *inside = true;
  for (Index d = 0; d < g.dimension(); ++d) {
    const Axis& a = g.axis(d);
    const double u = (x(d) - a.lower) / a.spacing;
    const double r = std::round(u);
    if (g.masked()) {
      if (r < 0 || r > a.count - 1) *inside = false;
    } else if (u < -1e-9 || u > (a.count - 1) + 1e-9) {
      *inside = false;
    }
    if (std::abs(u - r) > 1e-9) on_node = false;
    ix[d] = static_cast<Index>(std::clamp<double>(r, 0.0, a.count - 1.0));
  }
  const Index flat = g.flat_index(ix[0], ix[1]);
  if (g.masked() && *inside && !g.included(flat)) *inside = false;
  return on_node ? flat : -1;
}

// Left vectors of the first n modes sampled at the sample points.
Eigen::MatrixXd left_samples(const SampleSet& s, const SpectralSystem& sys, Index n) {
  if (!s.nodes.empty() && n <= sys.left_count()) {
    Eigen::MatrixXd H(s.size(), n);
    for (Index i = 0; i < s.size(); ++i) H.row(i) = sys.h.row(s.nodes[static_cast<std::size_t>(i)]).head(n);
    return H;
  }
  require(sys.beam.has_value(), "fit: spectral system has no beam; build its left vectors first");
  const Grid& dwell = *sys.dwell;
  Eigen::MatrixXd G(s.size(), dwell.size());
  for (Index j = 0; j < dwell.size(); ++j) {
    const Eigen::VectorXd xj = dwell.point(j);
    for (Index i = 0; i < s.size(); ++i) G(i, j) = eval(*sys.beam, s.points.row(i).transpose() - xj);
  }
  Eigen::MatrixXd H = G * sys.t.leftCols(n) * dwell.cell_measure();
  for (Index k = 0; k < n; ++k) H.col(k) /= std::sqrt(sys.lambda(k));
  return H;
}

Eigen::MatrixXd left_samples(const SampleSet& s, const TensorSystem& sys, Index n) {
  require(!s.nodes.empty(), "fit: tensor systems need samples located on domain nodes");
  Eigen::MatrixXd H(s.size(), n);
  for (Index i = 0; i < s.size(); ++i)
    for (Index k = 0; k < n; ++k) H(i, k) = sys.left_at(k, s.nodes[static_cast<std::size_t>(i)]);
  return H;
}

void check_modes(const Eigen::VectorXd& lambda, Index n_tr, Index available) {
  require(n_tr >= 1, "fit: N_tr must be at least 1");
  if (n_tr > available)
    fail(ErrorKind::invalid_argument, "fit: N_tr = " + std::to_string(n_tr) + " exceeds the " +
                                          std::to_string(available) + " modes above the clamp");
  for (Index n = 0; n < n_tr; ++n)
    require(lambda(n) > 0.0, "fit: clamped eigenvalue in the active set");
}

FitResult solve_truncated(const SampleSet& samples, const Eigen::MatrixXd& H, const Eigen::VectorXd& lambda,
                          double gamma) {
  require(gamma >= 0.0 && std::isfinite(gamma), "fit: gamma must be nonnegative");
  const Index N = H.rows();
  const Index n = H.cols();
  // Augmented least squares: [H; sqrt(2 gamma) diag(lambda^-1/2)] c ~ [eta; 0].
  Eigen::MatrixXd A(N + n, n);
  A.topRows(N) = H;
  A.bottomRows(n).setZero();
  if (gamma > 0.0) A.bottomRows(n).diagonal() = (2.0 * gamma / lambda.head(n).array()).sqrt().matrix();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + n);
  rhs.head(N) = samples.values;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  FitResult fit;
  fit.coefficients = cod.solve(rhs);
  fit.gamma = gamma;
  fit.n_tr = n;
  if (cod.rank() < n)
    fit.warnings.push_back("rank-deficient least-squares system (rank " + std::to_string(cod.rank()) + " of " +
                           std::to_string(n) + "); least-norm solution returned");
  fit.residual = samples.values - H * fit.coefficients;
  fit.empirical_error = 0.5 * fit.residual.squaredNorm() +
                        gamma * (fit.coefficients.array().square() / lambda.head(n).array()).sum();
  return fit;
}

Eigen::VectorXd tensor_lambda(const TensorSystem& sys) {
  Eigen::VectorXd l(sys.size());
  for (Index n = 0; n < sys.size(); ++n) l(n) = sys.modes[static_cast<std::size_t>(n)].lambda;
  return l;
}

}  // namespace

SampleSet make_samples(const Grid& domain, Eigen::MatrixXd points, Eigen::VectorXd values) {
  require(points.rows() == values.size(), "samples: point and value counts differ");
  require(points.cols() == domain.dimension(), "samples: point dimension does not match domain");
  require(values.allFinite() && points.allFinite(), "samples: values must be finite");
  SampleSet s{std::move(points), std::move(values), {}};
  std::vector<Index> nodes;
  bool all_nodes = true;
  for (Index i = 0; i < s.size(); ++i) {
    bool inside = false;
    const Index node = node_of(domain, s.points.row(i).transpose(), &inside);
    require(inside, "samples: point " + std::to_string(i) + " lies outside the domain");
    if (node < 0) all_nodes = false;
    nodes.push_back(node);
  }
  if (all_nodes) s.nodes = std::move(nodes);
  return s;
}

SampleSet samples_from_field(const FieldMap& h) {
  const Grid& g = h.grid();
  SampleSet s;
  s.nodes = g.included_indices();
  s.points = Eigen::MatrixXd(static_cast<Index>(s.nodes.size()), g.dimension());
  s.values = Eigen::VectorXd(static_cast<Index>(s.nodes.size()));
  for (std::size_t r = 0; r < s.nodes.size(); ++r) {
    s.points.row(static_cast<Index>(r)) = g.point(s.nodes[r]).transpose();
    s.values(static_cast<Index>(r)) = h(s.nodes[r]);
  }
  return s;
}

Eigen::VectorXd pseudoinverse_coefficients(const SpectralSystem& sys, const FieldMap& h, Index n_tr) {
  require(n_tr >= 0, "pseudoinverse: N_tr must be nonnegative");
  if (n_tr > sys.left_count() || n_tr > sys.usable())
    fail(ErrorKind::invalid_argument, "pseudoinverse: N_tr = " + std::to_string(n_tr) +
                                          " exceeds the available spectrum (" + std::to_string(sys.left_count()) +
                                          " left vectors)");
  require(h.grid().same_as(*sys.domain), "pseudoinverse: measurement is not on the system's domain grid");
  const Eigen::VectorXd wh = sys.domain->weights().cwiseProduct(h.values());
  Eigen::VectorXd c = sys.h.leftCols(n_tr).transpose() * wh;
  for (Index n = 0; n < n_tr; ++n) c(n) /= std::sqrt(sys.lambda(n));
  return c;
}

FieldMap pseudoinverse_apply(const SpectralSystem& sys, const FieldMap& h, Index n_tr) {
  const Eigen::VectorXd c = pseudoinverse_coefficients(sys, h, n_tr);
  return FieldMap(sys.dwell, sys.t.leftCols(n_tr) * c);
}

FitResult fit_truncated(const SampleSet& samples, const SpectralSystem& sys, Index n_tr, double gamma) {
  check_modes(sys.lambda, n_tr, sys.usable());
  return solve_truncated(samples, left_samples(samples, sys, n_tr), sys.lambda, gamma);
}

FitResult fit_truncated(const SampleSet& samples, const TensorSystem& sys, Index n_tr, double gamma) {
  const Eigen::VectorXd lambda = tensor_lambda(sys);
  check_modes(lambda, n_tr, sys.size());
  return solve_truncated(samples, left_samples(samples, sys, n_tr), lambda, gamma);
}

FieldMap reconstruct_filtered(const FitResult& fit, const SpectralSystem& sys) {
  const Index n = fit.coefficients.size();
  require(n <= sys.left_count(), "reconstruct_filtered: fit uses more modes than the system provides");
  return FieldMap(sys.domain, sys.h.leftCols(n) * fit.coefficients);
}

FieldMap reconstruct_filtered(const FitResult& fit, const TensorSystem& sys) {
  const Index n = fit.coefficients.size();
  require(n <= sys.size(), "reconstruct_filtered: fit uses more modes than the system provides");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(sys.domain->size());
  for (Index k = 0; k < n; ++k)
    if (fit.coefficients(k) != 0.0) v += fit.coefficients(k) * sys.left(k);
  return FieldMap(sys.domain, std::move(v));
}

FieldMap dwell_from_coeffs(const FitResult& fit, const SpectralSystem& sys) {
  const Index n = fit.coefficients.size();
  require(n <= sys.size(), "dwell_from_coeffs: fit uses more modes than the system provides");
  for (Index k = 0; k < n; ++k)
    if (!(sys.lambda(k) > 0.0)) fail(ErrorKind::invalid_argument, "dwell_from_coeffs: clamped eigenvalue in active set");
  const Eigen::VectorXd w = fit.coefficients.cwiseQuotient(sys.lambda.head(n).cwiseSqrt());
  return FieldMap(sys.dwell, sys.t.leftCols(n) * w);
}

FieldMap dwell_from_coeffs(const FitResult& fit, const TensorSystem& sys) {
  const Index n = fit.coefficients.size();
  require(n <= sys.size(), "dwell_from_coeffs: fit uses more modes than the system provides");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(sys.dwell->size());
  for (Index k = 0; k < n; ++k) {
    const double lam = sys.modes[static_cast<std::size_t>(k)].lambda;
    if (!(lam > 0.0)) fail(ErrorKind::invalid_argument, "dwell_from_coeffs: clamped eigenvalue in active set");
    if (fit.coefficients(k) != 0.0) v += fit.coefficients(k) / std::sqrt(lam) * sys.right(k);
  }
  return FieldMap(sys.dwell, std::move(v));
}

double truncation_threshold(double l_noise, double sigma) {
  require(l_noise > 0.0, "choose_truncation: l_noise must be positive");
  require(sigma > 0.0, "choose_truncation: sigma must be positive");
  const double k = 2.0 * kPi / l_noise;
  return std::exp(-k * k * sigma * sigma);
}

TruncationChoice choose_truncation(double l_noise, double sigma, const Eigen::VectorXd& eigenvalues) {
  TruncationChoice c;
  c.threshold = truncation_threshold(l_noise, sigma);
  while (c.n_tr < eigenvalues.size() && eigenvalues(c.n_tr) >= c.threshold) ++c.n_tr;
  if (c.n_tr == 0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "truncation threshold %.6g lies above the largest eigenvalue; no modes kept",
                  c.threshold);
    c.warning = buf;
  }
  return c;
}

FitResult rkhs_fit(const SampleSet& samples, const Beam& beam, double gamma) {
  require(gamma >= 0.0 && std::isfinite(gamma), "rkhs_fit: gamma must be nonnegative");
  require(samples.points.cols() == beam.dimension(), "rkhs_fit: sample dimension does not match beam");
  const Index N = samples.size();
  Eigen::MatrixXd K(N, N);
  for (Index j = 0; j < N; ++j)
    for (Index i = j; i < N; ++i) {
      const double v = autocorrelation(beam, samples.points.row(i).transpose() - samples.points.row(j).transpose());
      K(i, j) = v;
      K(j, i) = v;
    }
  FitResult fit;
  fit.gamma = gamma;
  fit.n_tr = N;
  Eigen::MatrixXd S = K;
  S.diagonal().array() += 2.0 * gamma;
  if (gamma == 0.0) S.diagonal().array() += 1e-12 * K.trace() / std::max<Index>(N, 1);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success) fail(ErrorKind::numeric_failure, "rkhs_fit: symmetric factorization failed");
  fit.coefficients = ldlt.solve(samples.values);
  if (ldlt.rcond() < 1e-12) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "ill-conditioned kernel matrix (reciprocal condition %.3e)", ldlt.rcond());
    fit.warnings.push_back(buf);
  }
  const Eigen::VectorXd Ka = K * fit.coefficients;
  fit.residual = samples.values - Ka;
  fit.empirical_error = 0.5 * fit.residual.squaredNorm() + gamma * fit.coefficients.dot(Ka);
  return fit;
}

Eigen::VectorXd rkhs_predict(const FitResult& fit, const Beam& beam, const SampleSet& samples,
                             const Eigen::MatrixXd& points) {
  require(fit.coefficients.size() == samples.size(), "rkhs_predict: fit does not match samples");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(points.rows());
  for (Index k = 0; k < points.rows(); ++k)
    for (Index i = 0; i < samples.size(); ++i)
      out(k) += fit.coefficients(i) *
                autocorrelation(beam, points.row(k).transpose() - samples.points.row(i).transpose());
  return out;
}

RkhsDwell::RkhsDwell(Beam beam, Eigen::MatrixXd centers, Eigen::VectorXd alpha)
    : beam_(std::move(beam)), centers_(std::move(centers)), alpha_(std::move(alpha)) {
  require(centers_.rows() == alpha_.size(), "rkhs_dwell: center and coefficient counts differ");
}

double RkhsDwell::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double s = 0.0;
  for (Index i = 0; i < alpha_.size(); ++i)
    if (alpha_(i) != 0.0) s += alpha_(i) * eval(beam_, x - centers_.row(i).transpose());
  return s;
}

FieldMap RkhsDwell::sample(const GridPtr& grid) const {
  return FieldMap::sample(grid, [this](const Eigen::VectorXd& x) { return (*this)(x); });
}

RkhsDwell rkhs_dwell(const FitResult& fit, const Beam& beam, const SampleSet& samples) {
  return RkhsDwell(beam, samples.points, fit.coefficients);
}

double kkt_scale(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b, const Eigen::VectorXd& a) {
  const double qn = Q.cwiseAbs().rowwise().sum().maxCoeff();
  const double s = b.cwiseAbs().maxCoeff() + qn * a.cwiseAbs().maxCoeff();
  return s > 0.0 ? s : 1.0;
}

double kkt_violation(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b, const Eigen::VectorXd& a) {
  const Eigen::VectorXd g = Q * a - b;
  double worst = 0.0;
  for (Index j = 0; j < a.size(); ++j) {
    if (a(j) < 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, a(j) > 0.0 ? std::abs(g(j)) : std::max(0.0, -g(j)));
  }
  return worst / kkt_scale(Q, b, a);
}

Eigen::VectorXd nnls_gram(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b, const NnlsOptions& opt) {
  const Index n = b.size();
  require(Q.rows() == n && Q.cols() == n, "nnls: matrix and vector sizes differ");
  const int max_iter = opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(3 * n + 10);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double scale0 = kkt_scale(Q, b, a);
  const double enter_tol = 1e-2 * opt.kkt_tolerance * scale0;

  auto solve_passive = [&](const std::vector<Index>& P) {
    const Index m = static_cast<Index>(P.size());
    Eigen::MatrixXd Qp(m, m);
    Eigen::VectorXd bp(m);
    for (Index r = 0; r < m; ++r) {
      bp(r) = b(P[r]);
      for (Index c = 0; c < m; ++c) Qp(r, c) = Q(P[r], P[c]);
    }
    return Eigen::VectorXd(Qp.ldlt().solve(bp));
  };

  int iter = 0;
  for (; iter < max_iter; ++iter) {
    const Eigen::VectorXd w = b - Q * a;
    Index enter = -1;
    double best = enter_tol;
    for (Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best) best = w(j), enter = j;
    if (enter < 0) break;
    passive[static_cast<std::size_t>(enter)] = true;
    for (int inner = 0; inner <= n; ++inner) {
      std::vector<Index> P;
      for (Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)]) P.push_back(j);
      if (P.empty()) break;
      const Eigen::VectorXd z = solve_passive(P);
      bool feasible = true;
      for (Index r = 0; r < z.size(); ++r)
        if (!(z(r) > 0.0)) feasible = false;
      if (feasible) {
        a.setZero();
        for (Index r = 0; r < z.size(); ++r) a(P[r]) = z(r);
        break;
      }
      // Step toward z until the first passive entry hits zero.
      double theta = 1.0;
      for (Index r = 0; r < z.size(); ++r)
        if (!(z(r) > 0.0)) theta = std::min(theta, a(P[r]) / (a(P[r]) - z(r)));
      for (Index r = 0; r < z.size(); ++r) {
        const Index j = P[r];
        a(j) += theta * (z(r) - a(j));
        if (a(j) <= 1e-15 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
          a(j) = 0.0;
          passive[static_cast<std::size_t>(j)] = false;
        }
      }
    }
  }
  a = a.cwiseMax(0.0);
  const double viol = kkt_violation(Q, b, a);
  if (!(viol <= opt.kkt_tolerance)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "nnls: KKT violation %.3e above tolerance %.1e after %d iterations", viol,
                  opt.kkt_tolerance, iter);
    throw ConvergenceFailure(buf, a);
  }
  return a;
}

FitResult rbf_fit_nonneg(const SampleSet& samples, const Eigen::MatrixXd& centers, const Beam& beam, double gamma,
                         const NnlsOptions& opt) {
  require(centers.rows() >= 1, "rbf_fit_nonneg: need at least one center");
  require(gamma >= 0.0 && std::isfinite(gamma), "rbf_fit_nonneg: gamma must be nonnegative");
  require(centers.cols() == beam.dimension() && samples.points.cols() == beam.dimension(),
          "rbf_fit_nonneg: point dimension does not match beam");
  const Index N = samples.size();
  const Index m = centers.rows();
  Eigen::MatrixXd F(N, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < N; ++i) F(i, j) = eval(beam, samples.points.row(i).transpose() - centers.row(j).transpose());
  Eigen::MatrixXd Q = F.transpose() * F;
  Q.diagonal().array() += 2.0 * gamma;
  const Eigen::VectorXd b = F.transpose() * samples.values;
  FitResult fit;
  fit.gamma = gamma;
  fit.n_tr = m;
  fit.coefficients = nnls_gram(Q, b, opt);
  fit.residual = samples.values - F * fit.coefficients;
  fit.empirical_error = 0.5 * fit.residual.squaredNorm() + gamma * fit.coefficients.squaredNorm();
  return fit;
}

Eigen::MatrixXd MultiBeamSystem::block(Index i, Index j) const {
  const Index n = dwell->size();
  return blocks.block(i * n, j * n, n, n);
}

Eigen::VectorXd MultiBeamSystem::rhs(const FieldMap& h) const {
  require(h.grid().same_as(*domain), "multibeam: measurement is not on the shared domain grid");
  const Index n = dwell->size();
  const Eigen::VectorXd wh = domain->weights().cwiseProduct(h.values());
  Eigen::VectorXd r(n * beam_count());
  for (Index i = 0; i < beam_count(); ++i)
    r.segment(i * n, n) = forward_samples(beams[static_cast<std::size_t>(i)], *dwell, *domain).transpose() * wh;
  return r;
}

MultiBeamSystem build_multibeam(std::vector<Beam> beams, const GridPtr& dwell, const GridPtr& domain,
                                const AssemblyOptions& opt) {
  require(!beams.empty(), "multibeam: need at least one beam");
  require(dwell && domain, "multibeam: null grid");
  for (const auto& b : beams)
    require(b.dimension() == dwell->dimension() && b.dimension() == domain->dimension(),
            "multibeam: beam and grid dimensions differ");
  MultiBeamSystem mb{std::move(beams), dwell, domain, {}, opt};
  const Index n = dwell->size();
  const Index nb = mb.beam_count();
  if (n * nb > opt.max_side)
    fail(ErrorKind::resource_limit, "multibeam: block system side " + std::to_string(n * nb) + " exceeds the cap");
  mb.blocks.resize(n * nb, n * nb);
  for (Index i = 0; i < nb; ++i)
    for (Index j = i; j < nb; ++j) {
      const auto& bi = mb.beams[static_cast<std::size_t>(i)];
      const auto& bj = mb.beams[static_cast<std::size_t>(j)];
      const KernelMatrix K = assemble_cross(bi, bj, dwell, *domain, opt);
      mb.blocks.block(i * n, j * n, n, n) = K.values;
      if (i != j) mb.blocks.block(j * n, i * n, n, n) = K.values.transpose();
    }
  return mb;
}

std::vector<FieldMap> multibeam_solve(const MultiBeamSystem& mb, const FieldMap& h, double gamma, bool nonneg,
                                      const NnlsOptions& opt) {
  require(gamma >= 0.0 && std::isfinite(gamma), "multibeam: gamma must be nonnegative");
  const Index n = mb.dwell->size();
  Eigen::MatrixXd S = mb.blocks;
  S.diagonal().array() += gamma;
  const Eigen::VectorXd r = mb.rhs(h);
  Eigen::VectorXd t;
  if (nonneg) {
    t = nnls_gram(S, r, opt);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success) fail(ErrorKind::numeric_failure, "multibeam: factorization failed");
    t = ldlt.solve(r);
    if (!t.allFinite()) fail(ErrorKind::numeric_failure, "multibeam: solve produced non-finite values");
  }
  std::vector<FieldMap> out;
  for (Index i = 0; i < mb.beam_count(); ++i) out.emplace_back(mb.dwell, t.segment(i * n, n));
  return out;
}

FieldMap tikhonov_solve(const Beam& beam, const GridPtr& dwell, const GridPtr& domain, const FieldMap& h,
                        double gamma, bool nonneg, const AssemblyOptions& opt) {
  const MultiBeamSystem mb = build_multibeam({beam}, dwell, domain, opt);
  return multibeam_solve(mb, h, gamma, nonneg).front();
}

FieldMap combined_forward(const MultiBeamSystem& mb, const std::vector<FieldMap>& t) {
  require(static_cast<Index>(t.size()) == mb.beam_count(), "combined_forward: one dwell map per beam expected");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(mb.domain->size());
  for (std::size_t i = 0; i < t.size(); ++i) v += apply_forward(t[i], mb.beams[i], mb.domain).values();
  return FieldMap(mb.domain, std::move(v));
}

double rms(const FieldMap& v) {
  const Grid& g = v.grid();
  if (g.included_count() == 0) return 0.0;
  double s = 0.0;
  for (Index i : g.included_indices()) s += v(i) * v(i);
  return std::sqrt(s / static_cast<double>(g.included_count()));
}

}  // namespace ibf
