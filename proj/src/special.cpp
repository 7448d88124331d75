#include "uent/special.hpp"

#include "uent/common.hpp"

#include <cmath>

namespace uent {

double digamma(double x) {
  if (!(x > 0.0)) throw DomainError("digamma: x must be > 0");
  double r = 0.0;
  while (x < 10.0) {
    r -= 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ ln x - 1/(2x) - sum B_{2n}/(2n x^{2n}); truncation < 1e-15 for x >= 10
  const double inv = 1.0 / x;
  const double t = inv * inv;
  const double series =
      t * (1.0 / 12 -
           t * (1.0 / 120 -
                t * (1.0 / 252 -
                     t * (1.0 / 240 -
                          t * (1.0 / 132 -
                               t * (691.0 / 32760 - t * (1.0 / 12)))))));
  return r + std::log(x) - 0.5 * inv - series;
}

double log_unit_ball_volume(int d, Norm p) {
  if (d < 1) throw DomainError("log_unit_ball_volume: d must be >= 1");
  switch (p) {
    case Norm::Linf:
      return 0.0;  // Gamma(1)^d / Gamma(1) in the p -> inf limit
    case Norm::L1:
      return d * std::lgamma(2.0) - std::lgamma(1.0 + d);
    case Norm::L2:
      return d * std::lgamma(1.5) - std::lgamma(1.0 + 0.5 * d);
  }
  throw DomainError("log_unit_ball_volume: bad norm");
}

double normal_cdf(double y) {
  const double v = 0.5 * std::erfc(-y * 0x1.6a09e667f3bcdp-1);  // 1/sqrt(2)
  if (v < 1e-15) return 1e-15;
  if (v > 1.0 - 1e-15) return 1.0 - 1e-15;
  return v;
}

double normal_log_pdf(double y) {
  return -0.91893853320467274178032973640562 - 0.5 * y * y;  // -log sqrt(2 pi)
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p in (0,1)");
  // Acklam's rational approximation, then one Halley step against erfc.
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
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double e = 0.5 * std::erfc(-x * 0x1.6a09e667f3bcdp-1) - p;
  const double u = e * 2.5066282746310005024157652848110 * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

namespace {

// Continued fraction for the regularized incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return h;
}

}  // namespace

double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("reg_inc_beta: a, b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double reg_inc_beta_inv(double a, double b, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("reg_inc_beta_inv: p in [0,1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  double lo = 0.0, hi = 1.0;
  double x = a / (a + b);
  for (int it = 0; it < 200; ++it) {
    const double f = reg_inc_beta(a, b, x) - p;
    if (std::fabs(f) < 1e-13) break;
    if (f > 0.0) hi = x; else lo = x;
    const double log_pdf = (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta;
    double step = f * std::exp(-log_pdf);
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection safeguard
    if (next == x) break;
    x = next;
  }
  return x;
}

}  // namespace uent
