#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>

#include "ibf/error.hpp"

namespace ibf {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// n-point rule, nodes ascending. Computed by Newton iteration on P_n.
GaussRule gauss_legendre(int n);

/// The 16-point rule used by every composite integration in the library.
const GaussRule& gauss_legendre_16();

/// Composite Gauss-Legendre over [a, b] with panels of width at most max_width.
template <class Fn>
double integrate_composite(Fn&& fn, double a, double b, double max_width, const GaussRule& rule = gauss_legendre_16()) {
  if (!(b > a)) return 0.0;
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / max_width - 1e-12)));
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    double s = 0.0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) s += rule.weights(i) * fn(mid + 0.5 * h * rule.nodes(i));
    sum += 0.5 * h * s;
  }
  return sum;
}

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

struct QuadOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
  int max_intervals = 4000;
};

/// Globally adaptive Gauss-Kronrod (7/15) on a finite interval. Throws a
/// numeric_failure error carrying the error estimate if the tolerance is not met.
QuadResult integrate_adaptive(const std::function<double(double)>& fn, double a, double b,
                              const QuadOptions& opt = {});

/// Integral over [a, inf), mapped to [0, 1) by x = a + s t / (1 - t).
QuadResult integrate_to_infinity(const std::function<double(double)>& fn, double a, double scale,
                                 const QuadOptions& opt = {});

/// Integral over the real line, mapped by x = s t / (1 - t^2).
QuadResult integrate_real_line(const std::function<double(double)>& fn, double scale, const QuadOptions& opt = {});

}  // namespace ibf
