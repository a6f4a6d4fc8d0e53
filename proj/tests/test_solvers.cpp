#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ibf/solvers.hpp"
#include "oracles.hpp"

using namespace ibf;
using std::numbers::pi;

namespace {

struct Fixture {
  GridPair grids;
  Beam beam = Beam::gaussian(1, 2.0);
  SpectralSystem sys;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x{make_interval_grids(30.0, 2.0, 0.5), Beam::gaussian(1, 2.0), {}};
    x.sys = build_spectral_system(x.beam, x.grids, {}, 40);
    return x;
  }();
  return f;
}

FieldMap left(const Fixture& f, Index n) { return FieldMap(f.grids.domain, f.sys.h.col(n)); }

// Minimum of (1/2) a^T Q a - b^T a over a >= 0 by enumerating free sets.
double brute_nnls(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(b.size());
  double best = 0.0;  // a = 0
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < n; ++j)
      if (mask & (1 << j)) idx.push_back(j);
    const int m = static_cast<int>(idx.size());
    Eigen::MatrixXd Qs(m, m);
    Eigen::VectorXd bs(m);
    for (int i = 0; i < m; ++i) {
      bs(i) = b(idx[i]);
      for (int j = 0; j < m; ++j) Qs(i, j) = Q(idx[i], idx[j]);
    }
    const Eigen::VectorXd as = Qs.ldlt().solve(bs);
    if (as.minCoeff() < 0.0) continue;
    best = std::min(best, 0.5 * as.dot(Qs * as) - bs.dot(as));
  }
  return best;
}

}  // namespace

TEST_CASE("pseudoinverse of a left vector") {
  const Fixture& f = fixture();
  const FieldMap h3 = left(f, 2);
  const FieldMap t = pseudoinverse_apply(f.sys, h3, 10);
  const Eigen::VectorXd expect = f.sys.t.col(2) / std::sqrt(f.sys.lambda(2));
  CHECK((t.values() - expect).cwiseAbs().maxCoeff() <= 1e-8 * expect.cwiseAbs().maxCoeff());
  const FieldMap back = apply_forward(t, f.beam, f.grids.domain);
  CHECK((back.values() - h3.values()).cwiseAbs().maxCoeff() <= 1e-6);
  const FieldMap zero = pseudoinverse_apply(f.sys, left(f, 20), 10);
  CHECK(zero.values().cwiseAbs().maxCoeff() <= 1e-8);
  const Eigen::VectorXd c = pseudoinverse_coefficients(f.sys, h3, 10);
  CHECK(c(2) == doctest::Approx(1.0 / std::sqrt(f.sys.lambda(2))).epsilon(1e-10));
  CHECK_THROWS_AS(pseudoinverse_apply(f.sys, h3, f.sys.left_count() + 1), Error);
}

TEST_CASE("pseudoinverse is a projection through the forward map") {
  const Fixture& f = fixture();
  const FieldMap h = FieldMap::sample(f.grids.domain, [](const Eigen::VectorXd& x) { return std::exp(-x(0) * x(0) / 50.0) + 0.1 * x(0) / 30.0; });
  const Index N = 15;
  const FieldMap back = apply_forward(pseudoinverse_apply(f.sys, h, N), f.beam, f.grids.domain);
  Eigen::VectorXd proj = Eigen::VectorXd::Zero(h.size());
  for (Index n = 0; n < N; ++n) proj += weighted_inner(left(f, n), h) * f.sys.h.col(n);
  CHECK((back.values() - proj).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("truncated fit recovers an exact expansion") {
  const Fixture& f = fixture();
  const Eigen::VectorXd eta = 3.0 * f.sys.h.col(0) - 2.0 * f.sys.h.col(4);
  const SampleSet s = samples_from_field(FieldMap(f.grids.domain, eta));
  const FitResult fit = fit_truncated(s, f.sys, 8, 0.0);
  CHECK(fit.coefficients(0) == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(fit.coefficients(4) == doctest::Approx(-2.0).epsilon(1e-8));
  for (Index n : {1, 2, 3, 5, 6, 7}) CHECK(std::abs(fit.coefficients(n)) <= 1e-8);
  CHECK(fit.empirical_error <= 1e-16);

  FitResult e1 = fit;
  e1.coefficients.setZero();
  CHECK(reconstruct_filtered(e1, f.sys).values().cwiseAbs().maxCoeff() == 0.0);
  e1.coefficients(0) = 1.0;
  CHECK((reconstruct_filtered(e1, f.sys).values() - f.sys.h.col(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((dwell_from_coeffs(e1, f.sys).values() - f.sys.t.col(0) / std::sqrt(f.sys.lambda(0))).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("truncated fit objective, ladder and round trip") {
  const Fixture& f = fixture();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  Eigen::VectorXd eta(f.grids.domain->size());
  for (Index i = 0; i < eta.size(); ++i) eta(i) = std::sin(f.grids.domain->point(i)(0) / 5.0) + 0.2 * n01(rng);
  const SampleSet s = samples_from_field(FieldMap(f.grids.domain, eta));
  double prev_misfit = -1.0, prev_norm = std::numeric_limits<double>::infinity();
  for (double gamma : {0.0, 1e-3, 1e-2, 1e-1, 1.0}) {
    const FitResult fit = fit_truncated(s, f.sys, 30, gamma);
    const double misfit = 0.5 * fit.residual.squaredNorm();
    double pen = 0.0;
    for (Index n = 0; n < 30; ++n) pen += fit.coefficients(n) * fit.coefficients(n) / f.sys.lambda(n);
    CHECK(fit.empirical_error == doctest::Approx(misfit + gamma * pen).epsilon(1e-10));
    CHECK(misfit >= prev_misfit - 1e-12);
    CHECK(fit.coefficients.norm() <= prev_norm + 1e-12);
    prev_misfit = misfit;
    prev_norm = fit.coefficients.norm();
    const FieldMap back = apply_forward(dwell_from_coeffs(fit, f.sys), f.beam, f.grids.domain);
    CHECK((back.values() - reconstruct_filtered(fit, f.sys).values()).cwiseAbs().maxCoeff() <= 1e-6);
  }
  CHECK(fit_truncated(s, f.sys, 30, 1e8).coefficients.norm() < 1e-3);

  // Filtered output is smoother than the raw noisy data.
  const FieldMap filtered = reconstruct_filtered(fit_truncated(s, f.sys, 30, 0.0), f.sys);
  auto second_diff = [](const Eigen::VectorXd& v) {
    double acc = 0.0;
    for (Index i = 1; i + 1 < v.size(); ++i) acc += std::pow(v(i + 1) - 2 * v(i) + v(i - 1), 2);
    return acc;
  };
  CHECK(second_diff(filtered.values()) <= second_diff(eta));
}

TEST_CASE("truncated fit with duplicate points warns") {
  const Fixture& f = fixture();
  Eigen::MatrixXd pts(4, 1);
  pts << 0.0, 0.0, 0.0, 0.0;
  const SampleSet s = make_samples(*f.grids.domain, pts, Eigen::VectorXd::Constant(4, 1.0));
  const FitResult fit = fit_truncated(s, f.sys, 5, 0.0);
  CHECK_FALSE(fit.warnings.empty());
  CHECK(fit.coefficients.allFinite());
}

TEST_CASE("sample validation") {
  const Fixture& f = fixture();
  Eigen::MatrixXd pts(1, 1);
  pts << 31.0;
  CHECK_THROWS_AS(make_samples(*f.grids.domain, pts, Eigen::VectorXd::Ones(1)), Error);
  pts << 0.0;
  CHECK_THROWS_AS(make_samples(*f.grids.domain, pts, Eigen::VectorXd::Constant(1, std::nan(""))), Error);
  pts << 0.25;
  CHECK(make_samples(*f.grids.domain, pts, Eigen::VectorXd::Ones(1)).nodes.empty());
  pts << 0.5;
  CHECK(make_samples(*f.grids.domain, pts, Eigen::VectorXd::Ones(1)).nodes.size() == 1);
}

TEST_CASE("truncation rule") {
  CHECK(truncation_threshold(16.0, 6.0) == doctest::Approx(3.876e-3).epsilon(1e-3));
  CHECK(std::log(truncation_threshold(16.0, 6.0)) == doctest::Approx(-std::pow(2 * pi / 16.0, 2) * 36.0).epsilon(1e-14));
  CHECK(truncation_threshold(2 * pi * 3.0, 3.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  Eigen::VectorXd ev(5);
  ev << 0.9, 0.5, 0.01, 0.004, 0.001;
  const TruncationChoice c = choose_truncation(16.0, 6.0, ev);
  CHECK(c.n_tr == 4);
  CHECK(c.warning.empty());
  const TruncationChoice big = choose_truncation(1e9, 6.0, ev);
  CHECK(big.n_tr == 0);
  CHECK_FALSE(big.warning.empty());
}

TEST_CASE("rkhs fit") {
  const Beam g = Beam::gaussian(1, 2.0);
  const GridPair grids = make_interval_grids(20.0, 2.0, 0.5);
  Eigen::MatrixXd p(2, 1);
  p << 0.0, 4.0;
  const SampleSet two = make_samples(*grids.domain, p, Eigen::VectorXd::Ones(2));
  const FitResult f2 = rkhs_fit(two, g, 0.0);
  // K = [[a, b], [b, a]] gives alpha = 1 / (a + b).
  CHECK(f2.coefficients(0) == doctest::Approx(1.0 / (0.1410474 + 0.0518884)).epsilon(1e-6));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-18.0, 18.0);
  Eigen::MatrixXd pts(25, 1);
  Eigen::VectorXd eta(25);
  for (Index i = 0; i < 25; ++i) {
    pts(i, 0) = -18.0 + 1.5 * static_cast<double>(i);
    eta(i) = std::cos(pts(i, 0) / 4.0) + 0.3 * u(rng) / 18.0;
  }
  const SampleSet s = make_samples(*grids.domain, pts, eta);
  const FitResult fit = rkhs_fit(s, g, 0.0);
  CHECK((rkhs_predict(fit, g, s, pts) - eta).cwiseAbs().maxCoeff() <= 1e-6 * eta.cwiseAbs().maxCoeff());

  double prev_mis = -1.0, prev_norm = std::numeric_limits<double>::infinity();
  for (double gamma : {1e-6, 1e-4, 1e-2, 1.0, 100.0}) {
    const FitResult r = rkhs_fit(s, g, gamma);
    const double mis = (rkhs_predict(r, g, s, pts) - eta).squaredNorm();
    CHECK(mis >= prev_mis - 1e-12);
    CHECK(r.coefficients.norm() <= prev_norm + 1e-12);
    prev_mis = mis;
    prev_norm = r.coefficients.norm();
  }
  CHECK(rkhs_fit(s, g, 1e9).coefficients.norm() < 1e-8);

  // t* = sum alpha_i f(x - x_i) and A t* = h* by quadrature.
  const RkhsDwell t = rkhs_dwell(fit, g, s);
  Eigen::MatrixXd eval(50, 1);
  for (Index i = 0; i < 50; ++i) eval(i, 0) = u(rng);
  const Eigen::VectorXd hstar = rkhs_predict(fit, g, s, eval);
  for (Index i = 0; i < 50; ++i) {
    const double x = eval(i, 0);
    Eigen::VectorXd y(1);
    const double conv = oracle::simpson([&](double z) { y(0) = z; return t(y) * oracle::gauss(x - z, 2.0); }, x - 40, x + 40, 8000);
    CHECK(std::abs(conv - hstar(i)) <= 1e-6);
  }
  Eigen::MatrixXd one(1, 1);
  one << 0.0;
  const RkhsDwell single(g, one, Eigen::VectorXd::Ones(1));
  Eigen::VectorXd x(1);
  x << 1.3;
  CHECK(single(x) == doctest::Approx(oracle::gauss(1.3, 2.0)).epsilon(1e-14));
  const RkhsDwell zero(g, one, Eigen::VectorXd::Zero(1));
  CHECK(zero(x) == 0.0);
}

TEST_CASE("nnls against exhaustive enumeration") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n01;
  for (int inst = 0; inst < 10; ++inst) {
    Eigen::MatrixXd A(40, 10);
    for (Index i = 0; i < A.size(); ++i) A.data()[i] = n01(rng);
    Eigen::VectorXd y(40);
    for (Index i = 0; i < 40; ++i) y(i) = n01(rng);
    const Eigen::MatrixXd Q = A.transpose() * A;
    const Eigen::VectorXd b = A.transpose() * y;
    const Eigen::VectorXd a = nnls_gram(Q, b);
    CHECK(a.minCoeff() >= 0.0);
    CHECK(kkt_violation(Q, b, a) <= 1e-8);
    const double obj = 0.5 * a.dot(Q * a) - b.dot(a);
    CHECK(std::abs(obj - brute_nnls(Q, b)) <= 1e-8 * std::max(1.0, std::abs(obj)));
  }
}

TEST_CASE("nonnegative rbf fit") {
  const Beam g = Beam::gaussian(1, 2.0);
  const GridPair grids = make_interval_grids(20.0, 2.0, 0.5);
  Eigen::MatrixXd centers(5, 1);
  centers << -12.0, -6.0, 0.0, 6.0, 12.0;
  Eigen::VectorXd alpha(5);
  alpha << 1.0, 0.0, 2.5, 0.7, 0.0;
  const Eigen::MatrixXd pts = grids.domain->points();
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(pts.rows());
  for (Index i = 0; i < pts.rows(); ++i)
    for (Index j = 0; j < 5; ++j) eta(i) += alpha(j) * oracle::gauss(pts(i, 0) - centers(j, 0), 2.0);
  const SampleSet s = make_samples(*grids.domain, pts, eta);
  const FitResult fit = rbf_fit_nonneg(s, centers, g, 0.0);
  CHECK((fit.coefficients - alpha).cwiseAbs().maxCoeff() <= 1e-6 * alpha.maxCoeff());
  CHECK(fit.coefficients.minCoeff() >= 0.0);

  Eigen::VectorXd neg(pts.rows());
  for (Index i = 0; i < pts.rows(); ++i) neg(i) = -oracle::gauss(pts(i, 0) - centers(0, 0), 2.0);
  const FitResult nf = rbf_fit_nonneg(make_samples(*grids.domain, pts, neg), centers, g, 0.1);
  CHECK(nf.coefficients.cwiseAbs().maxCoeff() == 0.0);
  CHECK(nf.empirical_error == doctest::Approx(0.5 * neg.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("nnls cap raises convergence failure with an iterate") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd A(30, 12);
  for (Index i = 0; i < A.size(); ++i) A.data()[i] = n01(rng);
  const Eigen::MatrixXd Q = A.transpose() * A;
  const Eigen::VectorXd b = A.transpose() * Eigen::VectorXd::Ones(30) * 5.0;
  NnlsOptions opt;
  opt.max_iterations = 1;
  try {
    const Eigen::VectorXd a = nnls_gram(Q, b, opt);
    CHECK(kkt_violation(Q, b, a) <= 1e-8);
  } catch (const ConvergenceFailure& e) {
    CHECK(e.kind() == ErrorKind::convergence_failure);
    CHECK(e.best().size() == 12);
    CHECK(e.best().minCoeff() >= 0.0);
  }
}

TEST_CASE("multibeam reductions") {
  const GridPair grids = make_interval_grids(20.0, 6.0, 0.5);
  const Beam g = Beam::gaussian(1, 2.0);
  const FieldMap h = FieldMap::sample(grids.domain, [](const Eigen::VectorXd& x) { return 1.0 + 0.3 * std::cos(x(0) / 3.0); });
  const MultiBeamSystem one = build_multibeam({g}, grids.dwell, grids.domain);
  CHECK((one.block(0, 0) - assemble_AstarA(g, grids.dwell, *grids.domain).values).cwiseAbs().maxCoeff() == 0.0);
  const std::vector<FieldMap> t1 = multibeam_solve(one, h, 1e-4, false);
  CHECK((t1[0].values() - tikhonov_solve(g, grids.dwell, grids.domain, h, 1e-4).values()).cwiseAbs().maxCoeff() == 0.0);

  const MultiBeamSystem twin = build_multibeam({g, g}, grids.dwell, grids.domain);
  const std::vector<FieldMap> tt = multibeam_solve(twin, h, 1e-3, false);
  CHECK((tt[0].values() - tt[1].values()).cwiseAbs().maxCoeff() <= 1e-8);

  const MultiBeamSystem mixed = build_multibeam({g, Beam::gaussian(1, 6.0)}, grids.dwell, grids.domain);
  CHECK((mixed.block(0, 1) - mixed.block(1, 0).transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  const std::vector<FieldMap> tn = multibeam_solve(mixed, h, 1e-3, true);
  CHECK(tn[0].values().minCoeff() >= 0.0);
  CHECK(tn[1].values().minCoeff() >= 0.0);
  CHECK(rms(FieldMap(grids.domain, combined_forward(mixed, tn).values() - h.values())) < 0.05);

  const GridPair other = make_interval_grids(10.0, 6.0, 0.5);
  CHECK_THROWS_AS(multibeam_solve(mixed, FieldMap::zeros(other.domain), 1e-3, false), Error);
}

TEST_CASE("multibeam synthesis round trip") {
  const GridPair grids = make_interval_grids(40.0, 6.0, 0.5);
  const Beam a = Beam::gaussian(1, 2.0), b = Beam::gaussian(1, 6.0);
  const FieldMap ta = FieldMap::sample(grids.dwell, [](const Eigen::VectorXd& x) { return 1.0 + 0.5 * std::cos(x(0) / 7.0); });
  const FieldMap tb = FieldMap::sample(grids.dwell, [](const Eigen::VectorXd& x) { return std::exp(-x(0) * x(0) / 400.0); });
  const FieldMap h(grids.domain, apply_forward(ta, a, grids.domain).values() + apply_forward(tb, b, grids.domain).values());
  const MultiBeamSystem mb = build_multibeam({a, b}, grids.dwell, grids.domain);
  const std::vector<FieldMap> t = multibeam_solve(mb, h, 1e-10, false);
  CHECK(rms(FieldMap(grids.domain, combined_forward(mb, t).values() - h.values())) <= 1e-6);
}

TEST_CASE("rms over included nodes") {
  const GridPtr disk = make_disk_mask(3.0, 1.0);
  Eigen::VectorXd v = Eigen::VectorXd::Constant(disk->size(), 100.0);
  for (Index i : disk->included_indices()) v(i) = 2.0;
  CHECK(rms(FieldMap(disk, v)) == doctest::Approx(2.0));
}
