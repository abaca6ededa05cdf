#include "modematch/special_functions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "modematch/error.hpp"

namespace modematch::special {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr int kMaxSeriesTerms = 100000;

void require_positive(double z, const char* what) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw_invalid(std::string(what) + ": argument must be positive and finite, got " +
                  std::to_string(z));
  }
}

// Series representation of P(a, x), valid for x < a + 1.
double gamma_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < kMaxSeriesTerms; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// Continued fraction for Q(a, x), valid for x >= a + 1 (modified Lentz).
double gamma_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxSeriesTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxSeriesTerms; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h;
}

bool has_lower_bound(const Distribution& dist) {
  return dist.kind != Distribution::Kind::Normal && dist.kind != Distribution::Kind::StudentT;
}

// Solves fn(x) = target for a monotone fn by bracketing and bisection to
// machine precision in x. `increasing` tells the direction of fn.
template <typename Fn>
double invert_monotone(const Distribution& dist, Fn fn, double target, bool increasing) {
  auto below = [&](double x) { return increasing ? fn(x) < target : fn(x) > target; };

  double lo;
  double hi;
  if (has_lower_bound(dist)) {
    lo = 0.0;
    hi = 1.0;
    double width = 1.0;
    while (below(hi)) {
      lo = hi;
      width *= 2.0;
      hi += width;
      if (!std::isfinite(hi)) throw_numerical("quantile: failed to bracket the root");
    }
  } else {
    const double centre = dist.kind == Distribution::Kind::Normal ? dist.first : 0.0;
    const double scale = dist.kind == Distribution::Kind::Normal ? std::sqrt(dist.second) : 1.0;
    lo = centre - scale;
    hi = centre + scale;
    double width = scale;
    while (!below(lo)) {
      hi = lo;
      width *= 2.0;
      lo -= width;
      if (!std::isfinite(lo)) throw_numerical("quantile: failed to bracket the root");
    }
    width = scale;
    while (below(hi)) {
      lo = hi;
      width *= 2.0;
      hi += width;
      if (!std::isfinite(hi)) throw_numerical("quantile: failed to bracket the root");
    }
  }

  for (int iter = 0; iter < 2000; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (below(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void require_open_unit(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    throw_invalid(std::string(what) + ": probability must lie strictly inside (0, 1), got " +
                  std::to_string(p));
  }
}

}  // namespace

double log_gamma(double z) {
  require_positive(z, "log_gamma");
  static constexpr double kG = 7.0;
  static constexpr double kCoeff[9] = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (z < 0.5) {
    // Reflection keeps the Lanczos sum in its accurate range.
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * z)) - log_gamma(1.0 - z);
  }
  const double x = z - 1.0;
  double a = kCoeff[0];
  for (int i = 1; i < 9; ++i) a += kCoeff[i] / (x + i);
  const double t = x + kG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (x + 0.5) * std::log(t) - t + std::log(a);
}

double digamma(double z) {
  require_positive(z, "digamma");
  double result = 0.0;
  while (z < 10.0) {
    result -= 1.0 / z;
    z += 1.0;
  }
  const double f = 1.0 / (z * z);
  const double series =
      f * (1.0 / 12 - f * (1.0 / 120 - f * (1.0 / 252 - f * (1.0 / 240 - f * (1.0 / 132)))));
  return result + std::log(z) - 0.5 / z - series;
}

double gamma_p(double a, double x) {
  require_positive(a, "gamma_p");
  if (x < 0.0 || std::isnan(x)) throw_invalid("gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_continued_fraction(a, x);
}

double gamma_q(double a, double x) {
  require_positive(a, "gamma_q");
  if (x < 0.0 || std::isnan(x)) throw_invalid("gamma_q: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_continued_fraction(a, x);
}

double beta_inc(double a, double b, double x) {
  require_positive(a, "beta_inc");
  require_positive(b, "beta_inc");
  if (!(x >= 0.0 && x <= 1.0)) throw_invalid("beta_inc: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

void Distribution::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  bool ok = true;
  switch (kind) {
    case Kind::Normal: ok = std::isfinite(first) && positive(second); break;
    case Kind::ChiSq: ok = positive(first); break;
    case Kind::ScaledChiSq: ok = positive(first) && positive(second); break;
    case Kind::StudentT: ok = positive(first); break;
    case Kind::FisherF: ok = positive(first) && positive(second); break;
  }
  if (!ok) throw_invalid("distribution parameters out of range");
}

double cdf(const Distribution& dist, double x) {
  dist.validate();
  if (std::isnan(x)) throw_invalid("cdf: x is NaN");
  switch (dist.kind) {
    case Distribution::Kind::Normal:
      return 0.5 * std::erfc(-(x - dist.first) / std::sqrt(2.0 * dist.second));
    case Distribution::Kind::ChiSq:
      return x <= 0.0 ? 0.0 : gamma_p(0.5 * dist.first, 0.5 * x);
    case Distribution::Kind::ScaledChiSq:
      return x <= 0.0 ? 0.0 : gamma_p(0.5 * dist.second, 0.5 * x / dist.first);
    case Distribution::Kind::StudentT: {
      const double nu = dist.first;
      if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
      const double x2 = x * x;
      // Near zero, nu/(nu + x^2) rounds to 1; use the complementary argument.
      const double tail = x2 < nu ? 0.5 - 0.5 * beta_inc(0.5, 0.5 * nu, x2 / (nu + x2))
                                  : 0.5 * beta_inc(0.5 * nu, 0.5, nu / (nu + x2));
      return x > 0.0 ? 1.0 - tail : tail;
    }
    case Distribution::Kind::FisherF: {
      if (x <= 0.0) return 0.0;
      if (std::isinf(x)) return 1.0;
      const double d1 = dist.first;
      const double d2 = dist.second;
      return beta_inc(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2));
    }
  }
  return 0.0;
}

double sf(const Distribution& dist, double x) {
  dist.validate();
  if (std::isnan(x)) throw_invalid("sf: x is NaN");
  switch (dist.kind) {
    case Distribution::Kind::Normal:
      return 0.5 * std::erfc((x - dist.first) / std::sqrt(2.0 * dist.second));
    case Distribution::Kind::ChiSq:
      return x <= 0.0 ? 1.0 : gamma_q(0.5 * dist.first, 0.5 * x);
    case Distribution::Kind::ScaledChiSq:
      return x <= 0.0 ? 1.0 : gamma_q(0.5 * dist.second, 0.5 * x / dist.first);
    case Distribution::Kind::StudentT:
      return cdf(dist, -x);
    case Distribution::Kind::FisherF: {
      if (x <= 0.0) return 1.0;
      if (std::isinf(x)) return 0.0;
      const double d1 = dist.first;
      const double d2 = dist.second;
      return beta_inc(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x));
    }
  }
  return 0.0;
}

double quantile(const Distribution& dist, double p) {
  dist.validate();
  require_open_unit(p, "quantile");
  if (p > 0.5) return upper_quantile(dist, 1.0 - p);
  return invert_monotone(dist, [&](double x) { return cdf(dist, x); }, p, true);
}

double upper_quantile(const Distribution& dist, double q) {
  dist.validate();
  require_open_unit(q, "upper_quantile");
  if (q > 0.5) return invert_monotone(dist, [&](double x) { return cdf(dist, x); }, 1.0 - q, true);
  return invert_monotone(dist, [&](double x) { return sf(dist, x); }, q, false);
}

double cdf_and_quantile(const Distribution& dist, CdfMode mode, double x) {
  return mode == CdfMode::Cdf ? cdf(dist, x) : quantile(dist, x);
}

double eval_polynomial(const PolynomialFamily& family, int n, double t) {
  if (n < 0) throw_invalid("eval_polynomial: degree must be nonnegative");
  if (n == 0) return 1.0;
  if (family.kind == PolynomialFamily::Kind::Hermite) {
    double prev = 1.0;
    double cur = t;
    for (int k = 1; k < n; ++k) {
      const double next = t * cur - k * prev;
      prev = cur;
      cur = next;
    }
    return cur;
  }
  const double alpha = family.order;
  double prev = 1.0;
  double cur = alpha + 1.0 - t;
  for (int k = 1; k < n; ++k) {
    const double next = (2.0 * k + 1.0 + alpha - t) * cur - k * (k + alpha) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double log_polynomial_norm2(const PolynomialFamily& family, int n) {
  if (n < 0) throw_invalid("log_polynomial_norm2: degree must be nonnegative");
  const double log_factorial = log_gamma(n + 1.0);
  if (family.kind == PolynomialFamily::Kind::Hermite) return log_factorial;
  const double a1 = family.order + 1.0;
  return log_factorial + log_gamma(a1 + n) - log_gamma(a1);
}

}  // namespace modematch::special
