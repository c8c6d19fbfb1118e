#include "pcawald/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pcawald {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxIterations = 100000;

void require_probability(double q, const char* who) {
  if (!(q > 0.0 && q < 1.0)) {
    throw std::domain_error(std::string(who) + ": probability must lie in (0, 1)");
  }
}

// Series for P(a, x), used when x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIterations; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction (modified Lentz) for Q(a, x), used when x ≥ a + 1.
double gamma_q_continued_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double chisq_pdf(double x, int df) {
  const double a = 0.5 * df;
  if (x <= 0.0) return df == 2 ? 0.5 : (df < 2 ? INFINITY : 0.0);
  return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::numbers::ln2 - std::lgamma(a));
}

// Acklam's rational approximation to Φ^{-1}, relative error below 1.2e-9.
double acklam_quantile(double q) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;
  if (q < low) {
    const double t = std::sqrt(-2.0 * std::log(q));
    return (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
           ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
  }
  if (q > 1.0 - low) {
    const double t = std::sqrt(-2.0 * std::log1p(-q));
    return -(((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
           ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
  }
  const double s = q - 0.5;
  const double r = s * s;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * s /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_cdf(double x) {
  if (std::isnan(x)) throw std::domain_error("normal_cdf: NaN argument");
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double q) {
  require_probability(q, "normal_quantile");
  double x = acklam_quantile(q);
  // One Halley step against the accurate cdf; the error is computed on the
  // smaller tail to avoid cancellation.
  const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  const double err = q < 0.5 ? normal_cdf(x) - q : (1.0 - q) - normal_cdf(-x);
  const double u = err / density;
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw std::domain_error("regularized_gamma_p: need a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_continued_fraction(a, x);
}

double chisq_cdf(double x, int df) {
  if (df < 1) throw std::domain_error("chisq_cdf: df must be >= 1");
  if (!(x >= 0.0)) throw std::domain_error("chisq_cdf: x must be nonnegative");
  return regularized_gamma_p(0.5 * df, 0.5 * x);
}

double chisq_quantile(double q, int df) {
  require_probability(q, "chisq_quantile");
  if (df < 1) throw std::domain_error("chisq_quantile: df must be >= 1");
  // Wilson-Hilferty start, then safeguarded Newton on a shrinking bracket.
  const double k = df;
  const double h = 2.0 / (9.0 * k);
  double x = k * std::pow(std::max(1.0 - h + normal_quantile(q) * std::sqrt(h), 1e-3), 3.0);
  double lo = 0.0;
  double hi = std::max(2.0 * x, k + 10.0);
  while (chisq_cdf(hi, df) < q) {
    lo = hi;
    hi *= 2.0;
  }
  x = std::clamp(x, lo, hi);
  for (int i = 0; i < 200; ++i) {
    const double f = chisq_cdf(x, df) - q;
    if (f < 0.0) lo = x; else hi = x;
    const double pdf = chisq_pdf(x, df);
    double next = (pdf > 0.0 && std::isfinite(pdf)) ? x - f / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, x) || hi - lo <= 1e-15 * std::max(1.0, hi)) {
      return next;
    }
    x = next;
  }
  return x;
}

}  // namespace pcawald
