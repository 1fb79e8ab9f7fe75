#include "bridgesmc/special.hpp"

#include <cmath>
#include <stdexcept>

#include "bridgesmc/common.hpp"

namespace bridgesmc {

double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: argument must be positive");
  double r = 0.0;
  while (x < 15.0) {
    r -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return r + std::log(x) - 0.5 * inv -
         inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
}

double reg_lower_gamma(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(a) || !std::isfinite(x))
    throw std::domain_error("reg_lower_gamma: need a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  const double lga = std::lgamma(a);
  if (x < a + 1.0) {
    // series expansion of P
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 2000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    const double p = sum * std::exp(a * std::log(x) - x - lga);
    return std::min(1.0, std::max(0.0, p));
  }
  // continued fraction for Q (modified Lentz)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 2000; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  const double q = std::exp(a * std::log(x) - x - lga) * h;
  return std::min(1.0, std::max(0.0, 1.0 - q));
}

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0,1)");
  // Acklam's rational approximation with one Halley refinement
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p > 1.0 - plow) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double gamma_quantile(double shape, double rate, double u) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::domain_error("gamma_quantile: shape and rate must be positive");
  u = std::min(std::max(u, 1e-300), 1.0 - 1e-16);

  // Wilson-Hilferty starting point
  const double z = normal_quantile(u);
  const double cc = 1.0 / (9.0 * shape);
  double y = shape * std::pow(std::max(1e-8, 1.0 - cc + z * std::sqrt(cc)), 3.0);
  if (!(y > 0.0) || !std::isfinite(y)) y = shape;

  const double lga = std::lgamma(shape);
  double lo = 0.0;
  double hi = kInf;
  for (int it = 0; it < 300; ++it) {
    const double f = reg_lower_gamma(shape, y) - u;
    if (f > 0.0)
      hi = std::min(hi, y);
    else
      lo = std::max(lo, y);
    if (std::fabs(f) < 1e-13 && it > 0) break;
    const double lpdf = (shape - 1.0) * std::log(y) - y - lga;
    double ynew;
    if (lpdf > -690.0) {
      ynew = y - f * std::exp(-lpdf);
    } else {
      ynew = kNegInf;  // force bisection
    }
    if (!(ynew > lo) || !(ynew < hi) || !std::isfinite(ynew)) {
      ynew = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * y;
    }
    if (ynew == y) break;
    y = ynew;
  }
  return y / rate;
}

double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double s = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += sign * term;
    sign = -sign;
    if (term < 1e-16) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * s));
}

}  // namespace bridgesmc
