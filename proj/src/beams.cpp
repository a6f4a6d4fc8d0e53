#include "ibf/beams.hpp"

#include <cmath>
#include <numbers>

#include "ibf/quadrature.hpp"
#include "ibf/special.hpp"

namespace ibf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTubeRatioFloor = 1e-12;
constexpr double kTubeSupport = 40.0;  // exp(-2.405 * 40) < 1e-41

void check_dim(int dim) { require(dim == 1 || dim == 2, "beam: dimension must be 1 or 2"); }

void check_positive(double v, const char* what) {
  require(v > 0.0 && std::isfinite(v), std::string("beam: ") + what + " must be positive");
}

void check_point(const Beam& beam, Index size) {
  require(size == beam.dimension(), "beam: point dimension does not match beam dimension");
}

double gaussian_density(const Eigen::MatrixXd& cov_inv, double det, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double n = static_cast<double>(x.size());
  const double q = x.dot(cov_inv * x);
  return std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * kPi, n) * det);
}

// Triangle (f * f) of the one-dimensional box of half width s.
double triangle(double x, double s) {
  const double ax = std::abs(x);
  return ax >= 2.0 * s ? 0.0 : (2.0 * s - ax) / (4.0 * s * s);
}

// Area of the intersection of two disks of radius s with centres d apart.
double lens_area(double d, double s) {
  if (d >= 2.0 * s) return 0.0;
  return 2.0 * s * s * std::acos(d / (2.0 * s)) - 0.5 * d * std::sqrt(4.0 * s * s - d * d);
}

double tube_kmax(double r, double R) {
  // The ratio decays like exp(-k (R - r)); step until below the floor.
  const double step = 1.0 / (R - r);
  double k = step;
  while (tube_ratio(k, r, R) > kTubeRatioFloor) k += step;
  return k;
}

// (1/pi) int_0^kmax g(k) cos(k xi) dk.
double tube_cosine_integral(double xi, double kmax, const std::function<double(double)>& g) {
  QuadOptions opt;
  opt.abs_tol = 1e-13;  // cancellation floor; K_R(0) is O(1/R)
  opt.rel_tol = 1e-12;
  auto integrand = [&](double k) { return g(k) * std::cos(k * xi); };
  return integrate_adaptive(integrand, 0.0, kmax, opt).value / kPi;
}

}  // namespace

const char* to_string(BeamFamily family) noexcept {
  switch (family) {
    case BeamFamily::gaussian: return "gaussian";
    case BeamFamily::gaussian_aniso: return "gaussian_aniso";
    case BeamFamily::cauchy_poisson: return "cauchy_poisson";
    case BeamFamily::moving_average_ball: return "moving_average_ball";
    case BeamFamily::moving_average_cube: return "moving_average_cube";
    case BeamFamily::sinc_truncation: return "sinc_truncation";
    case BeamFamily::tube_poisson: return "tube_poisson";
  }
  return "unknown";
}

BeamFamily parse_beam_family(const std::string& name) {
  for (auto f : {BeamFamily::gaussian, BeamFamily::gaussian_aniso, BeamFamily::cauchy_poisson,
                 BeamFamily::moving_average_ball, BeamFamily::moving_average_cube, BeamFamily::sinc_truncation,
                 BeamFamily::tube_poisson})
    if (name == to_string(f)) return f;
  fail(ErrorKind::invalid_argument, "unknown beam family '" + name + "'");
}

double tube_ratio(double k, double r, double R) {
  const double ak = std::abs(k);
  return bessel_i_scaled(0, ak * r) / bessel_i_scaled(0, ak * R) * std::exp(-ak * (R - r));
}

Beam Beam::gaussian(int dim, double sigma) {
  check_dim(dim);
  check_positive(sigma, "sigma");
  Beam b;
  b.family_ = BeamFamily::gaussian;
  b.dim_ = dim;
  b.sigma_ = sigma;
  b.cov_ = Eigen::MatrixXd::Identity(dim, dim) * sigma * sigma;
  b.cov_inv_ = Eigen::MatrixXd::Identity(dim, dim) / (sigma * sigma);
  b.cov_det_ = std::pow(sigma * sigma, dim);
  return b;
}

Beam Beam::gaussian_aniso(const Eigen::MatrixXd& covariance) {
  require(covariance.rows() == covariance.cols(), "beam: covariance must be square");
  const int dim = static_cast<int>(covariance.rows());
  check_dim(dim);
  require(covariance.allFinite(), "beam: covariance must be finite");
  require((covariance - covariance.transpose()).norm() <= 1e-12 * covariance.norm(),
          "beam: covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  require(llt.info() == Eigen::Success, "beam: covariance must be positive definite");
  Beam b;
  b.family_ = BeamFamily::gaussian_aniso;
  b.dim_ = dim;
  b.cov_ = covariance;
  b.cov_inv_ = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
  b.cov_det_ = covariance.determinant();
  require(b.cov_det_ > 0.0, "beam: covariance must be positive definite");
  return b;
}

Beam Beam::cauchy(int dim, double sigma) {
  check_dim(dim);
  check_positive(sigma, "sigma");
  Beam b;
  b.family_ = BeamFamily::cauchy_poisson;
  b.dim_ = dim;
  b.sigma_ = sigma;
  return b;
}

Beam Beam::ball(int dim, double radius) {
  check_dim(dim);
  check_positive(radius, "radius");
  Beam b;
  b.family_ = BeamFamily::moving_average_ball;
  b.dim_ = dim;
  b.sigma_ = radius;
  return b;
}

Beam Beam::cube(int dim, double half_side) {
  check_dim(dim);
  check_positive(half_side, "half side");
  Beam b;
  b.family_ = BeamFamily::moving_average_cube;
  b.dim_ = dim;
  b.sigma_ = half_side;
  return b;
}

Beam Beam::sinc(int dim, double cutoff) {
  check_dim(dim);
  check_positive(cutoff, "cutoff");
  Beam b;
  b.family_ = BeamFamily::sinc_truncation;
  b.dim_ = dim;
  b.cutoff_ = cutoff;
  return b;
}

Beam Beam::tube(double r, double R) {
  require(r >= 0.0 && std::isfinite(r), "beam: tube inner radius must be nonnegative");
  check_positive(R, "tube radius");
  require(r < R, "beam: tube requires r < R");
  Beam b;
  b.family_ = BeamFamily::tube_poisson;
  b.dim_ = 1;
  b.r_ = r;
  b.R_ = R;
  b.tube_kmax_ = tube_kmax(r, R);
  return b;
}

double Beam::scale() const {
  switch (family_) {
    case BeamFamily::gaussian_aniso: {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_, Eigen::EigenvaluesOnly);
      return std::sqrt(es.eigenvalues().maxCoeff());
    }
    case BeamFamily::sinc_truncation: return kPi / cutoff_;
    case BeamFamily::tube_poisson: return R_;
    default: return sigma_;
  }
}

bool Beam::separable() const {
  if (dim_ == 1) return true;
  switch (family_) {
    case BeamFamily::gaussian:
    case BeamFamily::moving_average_cube:
    case BeamFamily::sinc_truncation: return true;
    default: return false;
  }
}

Beam Beam::axis_factor() const {
  require(separable(), "beam: axis_factor needs a separable beam");
  if (dim_ == 1) return *this;
  switch (family_) {
    case BeamFamily::gaussian: return gaussian(1, sigma_);
    case BeamFamily::moving_average_cube: return cube(1, sigma_);
    default: return sinc(1, cutoff_);
  }
}

bool Beam::operator==(const Beam& o) const {
  return family_ == o.family_ && dim_ == o.dim_ && sigma_ == o.sigma_ && cutoff_ == o.cutoff_ && r_ == o.r_ &&
         R_ == o.R_ && cov_.rows() == o.cov_.rows() && (cov_.size() == 0 || cov_ == o.cov_);
}

double eval(const Beam& beam, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_point(beam, x.size());
  const double s = beam.sigma_;
  switch (beam.family_) {
    case BeamFamily::gaussian:
      if (beam.dim_ == 1) return std::exp(-0.5 * x(0) * x(0) / (s * s)) / (s * std::sqrt(2.0 * kPi));
      return std::exp(-0.5 * x.squaredNorm() / (s * s)) / (2.0 * kPi * s * s);
    case BeamFamily::gaussian_aniso: return gaussian_density(beam.cov_inv_, beam.cov_det_, x);
    case BeamFamily::cauchy_poisson: {
      const double q = s * s + x.squaredNorm();
      if (beam.dim_ == 1) return s / (kPi * q);
      return s / (2.0 * kPi * q * std::sqrt(q));
    }
    case BeamFamily::moving_average_ball:
      if (x.norm() > s) return 0.0;
      return beam.dim_ == 1 ? 1.0 / (2.0 * s) : 1.0 / (kPi * s * s);
    case BeamFamily::moving_average_cube:
      if (x.cwiseAbs().maxCoeff() > s) return 0.0;
      return 1.0 / std::pow(2.0 * s, beam.dim_);
    case BeamFamily::sinc_truncation: {
      const double K = beam.cutoff_;
      double v = 1.0;
      for (Index i = 0; i < x.size(); ++i) v *= (2.0 * K / kPi) * sinc(K * x(i));
      return v;
    }
    case BeamFamily::tube_poisson: {
      const double r = beam.r_, R = beam.R_;
      // Decays like exp(-2.405 |xi| / R) (first zero of I0 on the imaginary axis).
      if (std::abs(x(0)) > kTubeSupport * R) return 0.0;
      return tube_cosine_integral(x(0), beam.tube_kmax_, [r, R](double k) { return tube_ratio(k, r, R); });
    }
  }
  return 0.0;
}

double eval(const Beam& beam, double x) {
  Eigen::VectorXd p(1);
  p(0) = x;
  return eval(beam, p);
}

double l1_norm(const Beam& beam) {
  switch (beam.family()) {
    case BeamFamily::sinc_truncation:
      fail(ErrorKind::unsupported_for_family, "l1_norm: sinc_truncation has no finite L1 norm");
    case BeamFamily::tube_poisson: {
      // Computed by quadrature over the numerical support.
      auto f = [&](double x) { return std::abs(eval(beam, x)); };
      QuadOptions opt;
      opt.rel_tol = 1e-10;
      return 2.0 * integrate_adaptive(f, 0.0, kTubeSupport * beam.tube_radius(), opt).value;
    }
    default:
      // Nonnegative densities normalized to unit mass.
      return 1.0;
  }
}

double l2sq_norm(const Beam& beam) {
  const double s = beam.sigma_;
  const int n = beam.dim_;
  switch (beam.family_) {
    case BeamFamily::gaussian: return std::pow(1.0 / (2.0 * s * std::sqrt(kPi)), n);
    case BeamFamily::gaussian_aniso: return 1.0 / (std::pow(4.0 * kPi, 0.5 * n) * std::sqrt(beam.cov_det_));
    case BeamFamily::cauchy_poisson: return n == 1 ? 1.0 / (2.0 * kPi * s) : 1.0 / (8.0 * kPi * s * s);
    case BeamFamily::moving_average_ball: return n == 1 ? 1.0 / (2.0 * s) : 1.0 / (kPi * s * s);
    case BeamFamily::moving_average_cube: return 1.0 / std::pow(2.0 * s, n);
    case BeamFamily::sinc_truncation: return std::pow(4.0 * beam.cutoff_ / kPi, n);
    case BeamFamily::tube_poisson: {
      Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
      return autocorrelation(beam, zero);
    }
  }
  return 0.0;
}

double autocorrelation(const Beam& beam, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_point(beam, x.size());
  const double s = beam.sigma_;
  const int n = beam.dim_;
  switch (beam.family_) {
    case BeamFamily::gaussian:
    case BeamFamily::gaussian_aniso:
      // Sum of two independent copies: covariance doubles.
      return gaussian_density(0.5 * beam.cov_inv_, std::pow(2.0, n) * beam.cov_det_, x);
    case BeamFamily::cauchy_poisson:
      // Poisson kernels form a semigroup in the height parameter.
      return eval(Beam::cauchy(n, 2.0 * s), x);
    case BeamFamily::moving_average_ball:
      if (n == 1) return triangle(x(0), s);
      return lens_area(x.norm(), s) / (kPi * kPi * s * s * s * s);
    case BeamFamily::moving_average_cube: {
      double v = 1.0;
      for (Index i = 0; i < x.size(); ++i) v *= triangle(x(i), s);
      return v;
    }
    case BeamFamily::sinc_truncation:
      // The Fourier multiplier is the constant 2 on the pass band, so f * f = 2 f.
      return std::pow(2.0, n) * eval(beam, x);
    case BeamFamily::tube_poisson: {
      const double r = beam.r_, R = beam.R_;
      if (std::abs(x(0)) > 2.0 * kTubeSupport * R) return 0.0;
      return tube_cosine_integral(x(0), beam.tube_kmax_, [r, R](double k) {
        const double q = tube_ratio(k, r, R);
        return q * q;
      });
    }
  }
  return 0.0;
}

double autocorrelation(const Beam& beam, double x) {
  Eigen::VectorXd p(1);
  p(0) = x;
  return autocorrelation(beam, p);
}

double fourier_magnitude_sq(const Beam& beam, const Eigen::Ref<const Eigen::VectorXd>& k) {
  check_point(beam, k.size());
  const int n = beam.dimension();
  const double norm = std::pow(2.0 * kPi, -n);
  const double s = beam.sigma();
  switch (beam.family()) {
    case BeamFamily::gaussian:
    case BeamFamily::gaussian_aniso: return norm * std::exp(-k.dot(beam.covariance() * k));
    case BeamFamily::cauchy_poisson: return norm * std::exp(-2.0 * s * k.norm());
    case BeamFamily::moving_average_ball: {
      if (n == 1) return norm * std::pow(sinc(k(0) * s), 2);
      const double z = k.norm() * s;
      const double jinc = z < 1e-8 ? 1.0 : 2.0 * std::cyl_bessel_j(1.0, z) / z;
      return norm * jinc * jinc;
    }
    case BeamFamily::moving_average_cube: {
      double v = norm;
      for (Index i = 0; i < k.size(); ++i) v *= std::pow(sinc(k(i) * s), 2);
      return v;
    }
    case BeamFamily::sinc_truncation: {
      // Each axis contributes 2 / sqrt(2 pi) inside the pass band.
      const double K = beam.cutoff();
      for (Index i = 0; i < k.size(); ++i)
        if (std::abs(k(i)) > K) return 0.0;
      return norm * std::pow(4.0, n);
    }
    case BeamFamily::tube_poisson: {
      const double q = tube_ratio(k(0), beam.inner_radius(), beam.tube_radius());
      return norm * q * q;
    }
  }
  return 0.0;
}

double fourier_magnitude_sq(const Beam& beam, double k) {
  Eigen::VectorXd p(1);
  p(0) = k;
  return fourier_magnitude_sq(beam, p);
}

}  // namespace ibf
