#pragma once

// Scalar numerical kernels: log-gamma, digamma, incomplete gamma/beta,
// distribution functions with quantiles, and the orthogonal polynomials used
// by the correlation model.

namespace modematch::special {

/// ln Gamma(z) for z > 0 (Lanczos, g = 7).
double log_gamma(double z);

/// d/dz ln Gamma(z) for z > 0.
double digamma(double z);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), accurate in the tail.
double gamma_q(double a, double x);

/// Regularized incomplete beta I_x(a, b).
double beta_inc(double a, double b, double x);

double normal_pdf(double x);

struct Distribution {
  enum class Kind { Normal, ChiSq, ScaledChiSq, StudentT, FisherF };

  Kind kind = Kind::Normal;
  // Normal: (mean, variance); ChiSq: (df, unused); ScaledChiSq: (scale, df);
  // StudentT: (df, unused); FisherF: (df1, df2).
  double first = 0.0;
  double second = 1.0;

  static Distribution normal(double mean, double variance) { return {Kind::Normal, mean, variance}; }
  static Distribution chisq(double df) { return {Kind::ChiSq, df, 0.0}; }
  static Distribution scaled_chisq(double scale, double df) { return {Kind::ScaledChiSq, scale, df}; }
  static Distribution student_t(double df) { return {Kind::StudentT, df, 0.0}; }
  static Distribution fisher_f(double df1, double df2) { return {Kind::FisherF, df1, df2}; }

  /// Throws InvalidArgument unless all parameters are in range.
  void validate() const;
};

/// P(T <= x).
double cdf(const Distribution& dist, double x);
/// P(T > x), computed directly so upper-tail probabilities keep full precision.
double sf(const Distribution& dist, double x);
/// Inverse of cdf for p in (0, 1). Throws at p = 0 or 1.
double quantile(const Distribution& dist, double p);
/// Inverse of sf for q in (0, 1).
double upper_quantile(const Distribution& dist, double q);

enum class CdfMode { Cdf, Quantile };

/// Dispatches to cdf() or quantile().
double cdf_and_quantile(const Distribution& dist, CdfMode mode, double x);

struct PolynomialFamily {
  enum class Kind { Hermite, GeneralizedLaguerre };

  Kind kind = Kind::Hermite;
  double order = 0.0;  // Laguerre order parameter alpha

  static PolynomialFamily hermite() { return {Kind::Hermite, 0.0}; }
  static PolynomialFamily laguerre(double alpha) { return {Kind::GeneralizedLaguerre, alpha}; }
  /// Laguerre family matching a chi-square null with `df` degrees of freedom (alpha = df/2 - 1).
  static PolynomialFamily laguerre_for_chisq(double df) { return laguerre(df / 2.0 - 1.0); }
};

/// n-th polynomial at t.
///
/// Hermite: probabilists' He_n (He_0 = 1, He_1 = t, He_2 = t^2 - 1), squared norm n!.
/// Laguerre: n! L_n^{(alpha)}(t), i.e. L_1 = -t + alpha + 1 and
/// L_2 = t^2 - 2(alpha + 2)t + (alpha + 1)(alpha + 2); squared norm under the
/// Gamma(alpha + 1) weight is n! Gamma(alpha + 1 + n) / Gamma(alpha + 1).
double eval_polynomial(const PolynomialFamily& family, int n, double t);

/// log of the squared norm of eval_polynomial(family, n, .) under its weight.
double log_polynomial_norm2(const PolynomialFamily& family, int n);

}  // namespace modematch::special
