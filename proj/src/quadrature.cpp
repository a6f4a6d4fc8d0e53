#include "ibf/quadrature.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <queue>
#include <vector>

namespace ibf {

GaussRule gauss_legendre(int n) {
  require(n >= 1, "gauss_legendre: order must be positive");
  GaussRule rule{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess for the i-th largest root.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes(n - 1 - i) = x;
    rule.nodes(i) = -x;
    rule.weights(i) = w;
    rule.weights(n - 1 - i) = w;
  }
  if (n % 2 == 1) rule.nodes(n / 2) = 0.0;
  return rule;
}

const GaussRule& gauss_legendre_16() {
  static const GaussRule rule = gauss_legendre(16);
  return rule;
}

namespace {

constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                           0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                           0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                           0.207784955007898467600689403773245, 0.0};
constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                           0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                           0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                           0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                          0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)>& fn, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = fn(c);
  double kron = fc * wgk[7];
  double gauss = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * xgk[j];
    const double f1 = fn(c - dx);
    const double f2 = fn(c + dx);
    kron += wgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += wg[j / 2] * (f1 + f2);
  }
  if (!std::isfinite(kron)) fail(ErrorKind::numeric_failure, "adaptive quadrature: integrand is not finite");
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& fn, double a, double b, const QuadOptions& opt) {
  QuadResult out;
  if (a == b) return out;
  if (b < a) {
    out = integrate_adaptive(fn, b, a, opt);
    out.value = -out.value;
    return out;
  }
  std::priority_queue<Segment> heap;
  const Segment first = gk15(fn, a, b);
  heap.push(first);
  double value = first.value;
  double error = first.error;
  int count = 1;
  while (error > std::max(opt.abs_tol, opt.rel_tol * std::abs(value))) {
    if (count >= opt.max_intervals) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "adaptive quadrature did not converge on [%g, %g]: estimate %.6e, error %.3e after %d intervals",
                    a, b, value, error, count);
      fail(ErrorKind::numeric_failure, buf);
    }
    const Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval can no longer be split; accept what we have.
      heap.push(worst);
      break;
    }
    const Segment left = gk15(fn, worst.a, mid);
    const Segment right = gk15(fn, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  // Resum to shed accumulated round-off from the running updates.
  value = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  out.value = value;
  out.error = error;
  out.evaluations = (2 * count - 1) * 15;
  return out;
}

QuadResult integrate_to_infinity(const std::function<double(double)>& fn, double a, double scale,
                                 const QuadOptions& opt) {
  require(scale > 0.0, "integrate_to_infinity: scale must be positive");
  auto mapped = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double u = 1.0 - t;
    return fn(a + scale * t / u) * scale / (u * u);
  };
  return integrate_adaptive(mapped, 0.0, 1.0, opt);
}

QuadResult integrate_real_line(const std::function<double(double)>& fn, double scale, const QuadOptions& opt) {
  require(scale > 0.0, "integrate_real_line: scale must be positive");
  auto mapped = [&](double t) {
    const double u = 1.0 - t * t;
    if (u <= 0.0) return 0.0;
    return fn(scale * t / u) * scale * (1.0 + t * t) / (u * u);
  };
  return integrate_adaptive(mapped, -1.0, 1.0, opt);
}

}  // namespace ibf
