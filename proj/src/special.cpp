#include "ibf/special.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ibf/error.hpp"

namespace ibf {

namespace {

constexpr double kAsymptoticStart = 15.0;

// log of the k-th power-series term of exp(-z) I_n(z), z > 0.
double log_term(int n, double z, double k) {
  return (2.0 * k + n) * std::log(0.5 * z) - std::lgamma(k + 1.0) - std::lgamma(k + n + 1.0) - z;
}

// All terms are positive, so summing outward from the largest term keeps
// full relative accuracy and never overflows.
double series_scaled(int n, double z) {
  const double q = 0.25 * z * z;
  // Largest term: (k + 1)(k + 1 + n) ~ q.
  const double kpeak = std::max(0.0, std::floor(0.5 * (-(n + 2.0) + std::sqrt(n * n + 4.0 * q))));
  const double lpeak = log_term(n, z, kpeak);
  double sum = 1.0;
  double t = 1.0;
  for (double k = kpeak; t > 1e-18 * sum; k += 1.0) {
    t *= q / ((k + 1.0) * (k + 1.0 + n));
    sum += t;
  }
  t = 1.0;
  for (double k = kpeak; k >= 1.0 && t > 1e-18 * sum; k -= 1.0) {
    t *= k * (k + n) / q;
    sum += t;
  }
  return std::exp(lpeak) * sum;
}

double asymptotic_scaled(int n, double z) {
  const double mu = 4.0 * n * n;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double next = -term * (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * z);
    if (std::abs(next) > std::abs(term) || std::abs(next) < 1e-17 * std::abs(sum)) {
      if (std::abs(next) <= std::abs(term)) sum += next;
      break;
    }
    term = next;
    sum += term;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * z);
}

}  // namespace

double bessel_i_scaled(int n, double z) {
  n = std::abs(n);
  if (!std::isfinite(z)) fail(ErrorKind::numeric_failure, "bessel_i_scaled: non-finite argument");
  const double az = std::abs(z);
  if (az == 0.0) return n == 0 ? 1.0 : 0.0;
  const bool asymptotic = az >= kAsymptoticStart && az >= 0.5 * n * n;
  const double v = asymptotic ? asymptotic_scaled(n, az) : series_scaled(n, az);
  return (z < 0.0 && n % 2 == 1) ? -v : v;
}

double bessel_i(int n, double z) {
  const double s = bessel_i_scaled(n, z);
  const double az = std::abs(z);
  // log of the result must stay below log(DBL_MAX) ~ 709.78.
  if (s != 0.0 && az + std::log(std::abs(s)) > 709.0)
    fail(ErrorKind::numeric_failure, "bessel_i: result overflows; use bessel_i_scaled");
  return std::exp(az) * s;
}

double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

}  // namespace ibf
