#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "ibf/beams.hpp"
#include "ibf/core.hpp"
#include "ibf/kernels.hpp"
#include "ibf/spectral.hpp"

namespace ibf {

/// Scattered measurements eta_i at points x_i of the domain. When the points
/// are domain nodes, nodes holds their flat indices so that left singular
/// vectors can be read off directly.
struct SampleSet {
  Eigen::MatrixXd points;  // N x dim
  Eigen::VectorXd values;
  std::vector<Index> nodes;

  Index size() const { return values.size(); }
};

/// Validates that every point lies in the domain (inside an included cell for
/// masked domains) and that values are finite.
SampleSet make_samples(const Grid& domain, Eigen::MatrixXd points, Eigen::VectorXd values);
/// All included nodes of a measurement map.
SampleSet samples_from_field(const FieldMap& h);

struct FitResult {
  Eigen::VectorXd coefficients;
  double gamma = 0.0;
  Index n_tr = 0;
  /// Objective value at the returned coefficients.
  double empirical_error = 0.0;
  /// eta_i minus the fitted value at each sample.
  Eigen::VectorXd residual;
  std::vector<std::string> warnings;
};

/// Thrown by the constrained solvers when the iteration cap is reached; the
/// best feasible iterate is attached.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, Eigen::VectorXd best)
      : Error(ErrorKind::convergence_failure, what), best_(std::move(best)) {}
  const Eigen::VectorXd& best() const { return best_; }

 private:
  Eigen::VectorXd best_;
};

/// lambda_n^(-1/2) <h_n, h> for n < N_tr.
Eigen::VectorXd pseudoinverse_coefficients(const SpectralSystem& sys, const FieldMap& h, Index n_tr);
/// sum_{n < N_tr} lambda_n^(-1/2) <h_n, h> t_n.
FieldMap pseudoinverse_apply(const SpectralSystem& sys, const FieldMap& h, Index n_tr);

/// Minimizes (1/2) sum_i (eta_i - sum_n c_n h_n(x_i))^2 + gamma sum_n c_n^2 / lambda_n
/// over the first N_tr modes by a rank-revealing least-squares solve.
FitResult fit_truncated(const SampleSet& samples, const SpectralSystem& sys, Index n_tr, double gamma);
FitResult fit_truncated(const SampleSet& samples, const TensorSystem& sys, Index n_tr, double gamma);

/// sum_n c_n h_n on the domain grid.
FieldMap reconstruct_filtered(const FitResult& fit, const SpectralSystem& sys);
FieldMap reconstruct_filtered(const FitResult& fit, const TensorSystem& sys);

/// sum_n c_n lambda_n^(-1/2) t_n on the dwell grid.
FieldMap dwell_from_coeffs(const FitResult& fit, const SpectralSystem& sys);
FieldMap dwell_from_coeffs(const FitResult& fit, const TensorSystem& sys);

struct TruncationChoice {
  Index n_tr = 0;
  double threshold = 0.0;
  std::string warning;
};

/// exp(-(2 pi / l_noise)^2 sigma^2).
double truncation_threshold(double l_noise, double sigma);
/// Largest n with lambda_n >= truncation_threshold (eigenvalues descending).
TruncationChoice choose_truncation(double l_noise, double sigma, const Eigen::VectorXd& eigenvalues);

/// Representer fit: solves (K + 2 gamma I) alpha = eta with K_ij = (f * f)(x_i - x_j).
FitResult rkhs_fit(const SampleSet& samples, const Beam& beam, double gamma);
/// h*(x) = sum_i alpha_i (f * f)(x - x_i) at the rows of points.
Eigen::VectorXd rkhs_predict(const FitResult& fit, const Beam& beam, const SampleSet& samples,
                             const Eigen::MatrixXd& points);

/// t*(x) = sum_i alpha_i f(x - x_i).
class RkhsDwell {
 public:
  RkhsDwell(Beam beam, Eigen::MatrixXd centers, Eigen::VectorXd alpha);

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  FieldMap sample(const GridPtr& grid) const;
  const Eigen::VectorXd& alpha() const { return alpha_; }

 private:
  Beam beam_;
  Eigen::MatrixXd centers_;
  Eigen::VectorXd alpha_;
};

RkhsDwell rkhs_dwell(const FitResult& fit, const Beam& beam, const SampleSet& samples);

struct NnlsOptions {
  int max_iterations = 0;  // 0: 3 n + 10
  double kkt_tolerance = 1e-8;
};

/// Minimizes (1/2) a^T Q a - b^T a over a >= 0 for symmetric positive
/// definite Q (Lawson-Hanson active set in Gram form). The result satisfies
/// the KKT conditions with tolerance kkt_tolerance * kkt_scale.
Eigen::VectorXd nnls_gram(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b, const NnlsOptions& opt = {});

/// Scale used for the KKT certificate: ||b||_inf + ||Q||_inf ||a||_inf.
double kkt_scale(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b, const Eigen::VectorXd& a);
/// Largest KKT violation divided by kkt_scale.
double kkt_violation(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b, const Eigen::VectorXd& a);

/// Minimizes (1/2) sum_i (eta_i - sum_j a_j f(x_i - y_j))^2 + gamma sum_j a_j^2
/// over a >= 0. centers holds y_j as rows.
FitResult rbf_fit_nonneg(const SampleSet& samples, const Eigen::MatrixXd& centers, const Beam& beam, double gamma,
                         const NnlsOptions& opt = {});

/// Block normal equations of several beams sharing one dwell grid and domain.
struct MultiBeamSystem {
  std::vector<Beam> beams;
  GridPtr dwell;
  GridPtr domain;
  /// (n_beams * n) square; block (i, j) is A_i* A_j.
  Eigen::MatrixXd blocks;
  AssemblyOptions options;

  Index beam_count() const { return static_cast<Index>(beams.size()); }
  Eigen::MatrixXd block(Index i, Index j) const;
  /// Stacked A_i* h.
  Eigen::VectorXd rhs(const FieldMap& h) const;
};

MultiBeamSystem build_multibeam(std::vector<Beam> beams, const GridPtr& dwell, const GridPtr& domain,
                                const AssemblyOptions& opt = {});

/// Solves sum_j (A_i* A_j + gamma delta_ij) t_j = A_i* h, optionally with t_j >= 0.
std::vector<FieldMap> multibeam_solve(const MultiBeamSystem& mb, const FieldMap& h, double gamma, bool nonneg,
                                      const NnlsOptions& opt = {});

/// Single-beam Tikhonov solve (A*A + gamma I) t = A* h.
FieldMap tikhonov_solve(const Beam& beam, const GridPtr& dwell, const GridPtr& domain, const FieldMap& h,
                        double gamma, bool nonneg = false, const AssemblyOptions& opt = {});

/// Sum of the forward maps of every beam on the domain grid.
FieldMap combined_forward(const MultiBeamSystem& mb, const std::vector<FieldMap>& t);

/// Root mean square over the included nodes of a field.
double rms(const FieldMap& v);

}  // namespace ibf
