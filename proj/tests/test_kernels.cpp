#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ibf/kernels.hpp"
#include "oracles.hpp"

using namespace ibf;
using std::numbers::pi;

namespace {

// Refined Simpson oracle for the interval A*A kernel of two 1D Gaussians.
double interval_oracle(double x1, double x2, double si, double sj, double L) {
  return oracle::simpson([&](double x) { return oracle::gauss(x1 - x, si) * oracle::gauss(x - x2, sj); }, -L, L, 64000);
}

// int_disk f(x1 - x) f(x - x2) d^2x in polar coordinates.
double disk_oracle(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2, double sigma, double R) {
  const double c = 1.0 / (2.0 * pi * sigma * sigma);
  return oracle::simpson2(
      [&](double r, double phi) {
        const Eigen::Vector2d x(r * std::cos(phi), r * std::sin(phi));
        return c * c * std::exp(-((x1 - x).squaredNorm() + (x - x2).squaredNorm()) / (2.0 * sigma * sigma)) * r;
      },
      0.0, R, 0.0, 2.0 * pi, 800, 800);
}

}  // namespace

TEST_CASE("quadrature kernel values") {
  const Beam g = Beam::gaussian(1, 2.0);
  const GridPair grids = make_interval_grids(80.0, 2.0, 0.5);
  CHECK(std::abs(kstar_quadrature(g, *grids.domain, 0.0, 0.0) - 0.1410474) < 1e-6);
  CHECK(std::abs(kstar_quadrature(g, *grids.domain, 80.0, 80.0) - 0.0705237) < 1e-6);
  CHECK(std::abs(kstar_quadrature(g, *grids.domain, 100.0, 0.0)) < 1e-12);
  CHECK(kstar_quadrature(g, *grids.domain, 3.0, -7.0) == doctest::Approx(kstar_quadrature(g, *grids.domain, -7.0, 3.0)));
  const Beam c = Beam::cauchy(1, 1.0);
  CHECK(kstar_quadrature(c, *grids.domain, 1.5, 2.0) == doctest::Approx(kstar_quadrature(c, *grids.domain, 2.0, 1.5)));
}

TEST_CASE("closed-form gaussian kernel") {
  CHECK(std::abs(kstar_gaussian_closed(0, 0, 2.0, 80.0) - 1.0 / (4.0 * std::sqrt(pi))) < 1e-12);
  CHECK(std::abs(kstar_gaussian_closed(80, 80, 2.0, 80.0) - 0.5 / (4.0 * std::sqrt(pi))) < 1e-10);
  CHECK(kstar_gaussian_closed(1.3, -4.1, 2.0, 80.0) == kstar_gaussian_closed(-4.1, 1.3, 2.0, 80.0));
  const GridPair grids = make_interval_grids(10.0, 2.0, 0.5);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-14.0, 14.0);
  for (int i = 0; i < 20; ++i) {
    const double a = u(rng), b = u(rng);
    CHECK(std::abs(kstar_gaussian_closed(a, b, 2.0, 10.0) - interval_oracle(a, b, 2.0, 2.0, 10.0)) < 1e-10);
    CHECK(std::abs(kstar_gaussian_closed(a, b, 2.0, 10.0) - kstar_quadrature(Beam::gaussian(1, 2.0), *grids.domain, a, b)) < 1e-8);
  }
}

TEST_CASE("cross-beam kernel") {
  CHECK(crossbeam_kernel(1.0, -2.0, 2.0, 2.0, 30.0) == doctest::Approx(kstar_gaussian_closed(1.0, -2.0, 2.0, 30.0)).epsilon(1e-14));
  const double q = oracle::simpson([](double x) { return oracle::gauss(x, 2.0) * oracle::gauss(x, 6.0); }, -80, 80, 64000);
  CHECK(std::abs(crossbeam_kernel(0, 0, 2.0, 6.0, 80.0) - q) < 1e-10);
  CHECK(crossbeam_kernel(1.5, -3.0, 2.0, 6.0, 20.0) == doctest::Approx(crossbeam_kernel(-3.0, 1.5, 6.0, 2.0, 20.0)).epsilon(1e-14));
  CHECK(std::abs(crossbeam_kernel(12.0, 19.0, 2.0, 6.0, 20.0) - interval_oracle(12.0, 19.0, 2.0, 6.0, 20.0)) < 1e-10);
}

TEST_CASE("assembled gaussian matrix") {
  const Beam g = Beam::gaussian(1, 2.0);
  const GridPair grids = make_interval_grids(80.0, 2.0, 0.5);
  const KernelMatrix K = assemble_AstarA(g, grids.dwell, *grids.domain);
  REQUIRE(K.values.rows() == 361);
  CHECK(K.symmetric);
  CHECK((K.values - K.values.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * K.values.cwiseAbs().maxCoeff());
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K.values, Eigen::EigenvaluesOnly).eigenvalues();
  CHECK(ev.minCoeff() >= -1e-10);
  CHECK(ev.maxCoeff() < 1.0);

  // Lattice matrix equals Delta G^T W G.
  const Eigen::MatrixXd G = forward_samples(g, *grids.dwell, *grids.domain);
  const Eigen::MatrixXd ref = 0.5 * G.transpose() * grids.domain->weights().asDiagonal() * G;
  CHECK((K.values - ref).cwiseAbs().maxCoeff() < 1e-15);

  AssemblyOptions cont;
  cont.measure = KernelMeasure::continuous;
  const KernelMatrix C = assemble_AstarA(g, grids.dwell, *grids.domain, cont);
  const Eigen::VectorXd cev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(C.values, Eigen::EigenvaluesOnly).eigenvalues();
  CHECK(cev.minCoeff() >= -1e-10 * cev.maxCoeff());
  CHECK(cev.maxCoeff() < 1.0);
  CHECK(C.values(10, 20) == doctest::Approx(0.5 * kstar_gaussian_closed(grids.dwell->point(10)(0), grids.dwell->point(20)(0), 2.0, 80.0)).epsilon(1e-14));
}

TEST_CASE("closed-form and quadrature assembly agree") {
  const Beam g = Beam::gaussian(1, 2.0);
  const GridPair grids = make_interval_grids(8.0, 2.0, 0.5);
  AssemblyOptions cont;
  cont.measure = KernelMeasure::continuous;
  const KernelMatrix C = assemble_AstarA(g, grids.dwell, *grids.domain, cont);
  for (Index i = 0; i < grids.dwell->size(); i += 3)
    for (Index j = 0; j < grids.dwell->size(); j += 5) {
      const double q = 0.5 * kstar_quadrature(g, *grids.domain, grids.dwell->point(i), grids.dwell->point(j));
      CHECK(std::abs(C.values(i, j) - q) < 1e-8);
    }
}

TEST_CASE("assembly limits and degenerate domains") {
  const Beam g = Beam::gaussian(1, 2.0);
  const GridPair grids = make_interval_grids(80.0, 2.0, 0.5);
  AssemblyOptions small;
  small.max_side = 100;
  try {
    assemble_AstarA(g, grids.dwell, *grids.domain, small);
    FAIL("expected resource_limit");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::resource_limit);
  }
  const GridPtr disk = make_disk_mask(3.0, 1.0);
  const Grid empty(disk->axes(), std::vector<std::uint8_t>(static_cast<std::size_t>(disk->size()), 0));
  const GridPtr dwell = make_dwell_grid(empty, 4.0);
  const KernelMatrix Z = assemble_AstarA(Beam::gaussian(2, 1.0), dwell, empty);
  CHECK(Z.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cross assembly is the transpose under beam exchange") {
  const GridPair grids = make_interval_grids(10.0, 6.0, 0.5);
  const Beam a = Beam::gaussian(1, 2.0), b = Beam::gaussian(1, 6.0);
  for (KernelMeasure m : {KernelMeasure::lattice, KernelMeasure::continuous}) {
    AssemblyOptions opt;
    opt.measure = m;
    const KernelMatrix ab = assemble_cross(a, b, grids.dwell, *grids.domain, opt);
    const KernelMatrix ba = assemble_cross(b, a, grids.dwell, *grids.domain, opt);
    CHECK((ab.values - ba.values.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    const KernelMatrix aa = assemble_cross(a, a, grids.dwell, *grids.domain, opt);
    CHECK((aa.values - assemble_AstarA(a, grids.dwell, *grids.domain, opt).values).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("autocorrelation kernel") {
  const Beam g = Beam::gaussian(2, 2.0);
  const Eigen::Vector2d a(1.0, 2.0), b(-1.0, 0.5), s(7.0, -3.0);
  CHECK(kernel_AAstar(g, a, b) == kernel_AAstar(g, a + s, b + s));
  const Beam g1 = Beam::gaussian(1, 2.0);
  Eigen::VectorXd x(1), y(1);
  x << 4.0;
  y << 0.0;
  CHECK(kernel_AAstar(g1, x, x) == doctest::Approx(0.1410474).epsilon(1e-6));
  CHECK(kernel_AAstar(g1, x, y) == doctest::Approx(0.051888).epsilon(1e-5));
}

TEST_CASE("theta lattice kernel") {
  auto brute = [](double x1, double x2, double s, double d) {
    double sum = 0.0;
    for (int m = -200; m <= 200; ++m)
      sum += std::exp(-std::pow(x1 - d * m, 2) / (2 * s * s)) * std::exp(-std::pow(d * m - x2, 2) / (2 * s * s)) / (2 * pi * s * s);
    return sum;
  };
  CHECK(std::abs(theta_AAstar(0, 0, 2.0, 0.5) - brute(0, 0, 2.0, 0.5)) < 1e-14);
  CHECK(std::abs(theta_AAstar(3.3, -1.2, 2.0, 0.5) - brute(3.3, -1.2, 2.0, 0.5)) < 1e-14);
  CHECK(std::abs(theta_AAstar(0.7, 0.2, 2.0, 0.5) - theta_AAstar(1.2, 0.7, 2.0, 0.5)) < 1e-12);
  // Delta * theta tends to (f * f) with second-order error.
  const Beam g = Beam::gaussian(1, 2.0);
  const double target = autocorrelation(g, 1.1);
  double prev = 0.0;
  for (double d : {0.5, 0.25, 0.125}) {
    const double err = std::abs(d * theta_AAstar(0.3, -0.8, 2.0, d) - target);
    CHECK(err <= std::max(1e-3 * d * d, 1e-15));
    if (prev > 0.0) CHECK(err <= prev + 1e-15);
    prev = err;
  }
}

TEST_CASE("disk sector kernels") {
  CHECK(disk_sector_kernel(0, 0, 0, 2.0, 10.0) == doctest::Approx(2.0 * (1 - std::exp(-25.0)) / (16.0 * pi)).epsilon(1e-10));
  CHECK(disk_sector_kernel(0, 0, 0, 2.0, 10.0) == doctest::Approx(0.039788).epsilon(1e-5));
  CHECK(disk_sector_kernel(2, 1.3, 4.2, 2.0, 10.0) == disk_sector_kernel(2, 4.2, 1.3, 2.0, 10.0));
  // Radial integral oracle with the standard library Bessel function.
  auto radial = [](int m, double r1, double r2, double s, double R) {
    return oracle::simpson([&](double r) {
             return std::exp(-r * r / (s * s)) * std::cyl_bessel_i(m, r * r1 / (s * s)) * std::cyl_bessel_i(m, r * r2 / (s * s)) * r;
           }, 0.0, R, 20000) * std::exp(-(r1 * r1 + r2 * r2) / (2 * s * s)) / (pi * std::pow(s, 4));
  };
  for (int m : {0, 1, 3, 7})
    CHECK(std::abs(disk_sector_kernel(m, 2.5, 3.5, 2.0, 10.0) - radial(m, 2.5, 3.5, 2.0, 10.0)) < 1e-12);
  // Decay away from the disk.
  const double s = 2.0;
  for (int m : {0, 3}) CHECK(std::abs(disk_sector_kernel(m, 8 * s + 10.0, 1.0, s, 10.0)) < std::exp(-std::pow(8 * s, 2) / (4 * s * s)));
}

TEST_CASE("disk series reproduces the full kernel") {
  const double s = 2.0, R = 10.0;
  const Eigen::Vector2d x1(4.0 * std::cos(0.3), 4.0 * std::sin(0.3));
  const Eigen::Vector2d x2(4.0 * std::cos(1.1), 4.0 * std::sin(1.1));
  CHECK(std::abs(disk_kernel_series(x1, x2, s, R) - disk_oracle(x1, x2, s, R)) < 1e-6);
  const Eigen::Vector2d y1(9.0, 1.0), y2(-2.0, 7.5);
  CHECK(std::abs(disk_kernel_series(y1, y2, s, R) - disk_oracle(y1, y2, s, R)) < 1e-6);
  CHECK(std::abs(disk_kernel_series(Eigen::Vector2d::Zero(), x2, s, R) - disk_oracle(Eigen::Vector2d::Zero(), x2, s, R)) < 1e-6);
}
