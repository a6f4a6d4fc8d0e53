#pragma once

#include <Eigen/Dense>

#include <string>

#include "ibf/core.hpp"

namespace ibf {

enum class BeamFamily {
  gaussian,
  gaussian_aniso,
  cauchy_poisson,
  moving_average_ball,
  moving_average_cube,
  sinc_truncation,
  tube_poisson,
};

const char* to_string(BeamFamily family) noexcept;
/// Parses the names printed by to_string; throws invalid_argument otherwise.
BeamFamily parse_beam_family(const std::string& name);

/// Tool influence function: a family plus its scale parameters.
///
/// Parameter meaning per family:
///   gaussian            sigma = standard deviation per axis
///   gaussian_aniso      covariance matrix B
///   cauchy_poisson      sigma = height of the Poisson kernel
///   moving_average_ball sigma = radius of the averaging ball
///   moving_average_cube sigma = half side of the averaging cube
///   sinc_truncation     cutoff K (wavenumber)
///   tube_poisson        inner radius r, tube radius R (one dimension only)
class Beam {
 public:
  static Beam gaussian(int dim, double sigma);
  static Beam gaussian_aniso(const Eigen::MatrixXd& covariance);
  static Beam cauchy(int dim, double sigma);
  static Beam ball(int dim, double radius);
  static Beam cube(int dim, double half_side);
  static Beam sinc(int dim, double cutoff);
  static Beam tube(double r, double R);

  BeamFamily family() const { return family_; }
  int dimension() const { return dim_; }
  /// sigma, ball radius, cube half side (zero for the other families).
  double sigma() const { return sigma_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  double cutoff() const { return cutoff_; }
  double inner_radius() const { return r_; }
  double tube_radius() const { return R_; }

  /// Length used to size dwell-grid margins: sigma for gaussian, cauchy and
  /// moving averages, the largest principal standard deviation for
  /// gaussian_aniso, pi/K for sinc, and R for the tube.
  double scale() const;

  /// True when f(x) = f(-x).
  bool even() const { return true; }
  /// True when f is a product of identical one-dimensional factors.
  bool separable() const;
  /// The one-dimensional factor of a separable beam.
  Beam axis_factor() const;

  bool operator==(const Beam& other) const;

 private:
  Beam() = default;

  BeamFamily family_ = BeamFamily::gaussian;
  int dim_ = 1;
  double sigma_ = 0.0;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd cov_inv_;
  double cov_det_ = 0.0;
  double cutoff_ = 0.0;
  double r_ = 0.0;
  double R_ = 0.0;
  double tube_kmax_ = 0.0;

  friend double eval(const Beam&, const Eigen::Ref<const Eigen::VectorXd>&);
  friend double autocorrelation(const Beam&, const Eigen::Ref<const Eigen::VectorXd>&);
  friend double l2sq_norm(const Beam&);
};

double eval(const Beam& beam, const Eigen::Ref<const Eigen::VectorXd>& x);
/// One-dimensional convenience overload.
double eval(const Beam& beam, double x);

/// Integral of |f|. Throws unsupported_for_family for sinc_truncation.
double l1_norm(const Beam& beam);
/// Integral of f^2.
double l2sq_norm(const Beam& beam);
/// (f * f)(x).
double autocorrelation(const Beam& beam, const Eigen::Ref<const Eigen::VectorXd>& x);
double autocorrelation(const Beam& beam, double x);
/// |(Ff)(k)|^2 with (Ff)(k) = (2 pi)^(-n/2) int f(x) exp(-i k.x) dx.
double fourier_magnitude_sq(const Beam& beam, const Eigen::Ref<const Eigen::VectorXd>& k);
double fourier_magnitude_sq(const Beam& beam, double k);

/// I_0(k r) / I_0(k R), the Fourier multiplier of the tube kernel.
double tube_ratio(double k, double r, double R);

}  // namespace ibf
