#include "modematch/correlation.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "modematch/error.hpp"
#include "modematch/special_functions.hpp"

namespace modematch {

void RhoMoments::validate() const {
  for (std::size_t i = 0; i < moments.size(); ++i) {
    const double m = moments[i];
    if (!std::isfinite(m) || std::abs(m) > 1.0) throw_invalid("correlation moments must lie in [-1, 1]");
    if ((i + 1) % 2 == 0 && m < 0.0) throw_invalid("even correlation moments must be nonnegative");
  }
  if (moments.size() >= 2 && moments[1] < moments[0] * moments[0] - 1e-15) {
    throw_invalid("E(rho^2) must be at least E(rho)^2");
  }
}

RhoMoments RhoMoments::constant(double rho, int n_max) {
  if (n_max < 0) throw_invalid("n_max must be nonnegative");
  RhoMoments r;
  double p = 1.0;
  for (int n = 1; n <= n_max; ++n) r.moments.push_back(p *= rho);
  r.validate();
  return r;
}

double orthonormal_polynomial(const NullParams& null, int n, double t) {
  if (n < 0) throw_invalid("polynomial order must be nonnegative");
  if (n == 0) return 1.0;
  if (null.base == NullBase::Normal) {
    const double z = (t - null.first) / std::sqrt(null.second);
    const auto fam = special::PolynomialFamily::hermite();
    return special::eval_polynomial(fam, n, z) * std::exp(-0.5 * special::log_polynomial_norm2(fam, n));
  }
  const auto fam = special::PolynomialFamily::laguerre_for_chisq(null.second);
  const double u = t / (2.0 * null.first);
  const double sign = n % 2 == 0 ? 1.0 : -1.0;
  return sign * special::eval_polynomial(fam, n, u) * std::exp(-0.5 * special::log_polynomial_norm2(fam, n));
}

double lancaster_density(const NullParams& null, double rho, double ti, double tj, int n_max) {
  null.validate();
  if (!(std::abs(rho) < 1.0)) throw_invalid("|rho| must be below 1");
  if (!null.in_support(ti) || !null.in_support(tj)) return 0.0;
  double sum = 0.0;
  double p = 1.0;
  for (int n = 0; n <= n_max; ++n) {
    sum += p * orthonormal_polynomial(null, n, ti) * orthonormal_polynomial(null, n, tj);
    p *= rho;
  }
  return null.density(ti) * null.density(tj) * sum;
}

namespace {

Eigen::VectorXd poly_vector(const NullParams& null, const Eigen::VectorXd& t, int n) {
  Eigen::VectorXd q(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    q(k) = null.in_support(t(k)) ? orthonormal_polynomial(null, n, t(k)) : 0.0;
  }
  return q;
}

}  // namespace

Eigen::MatrixXd delta_matrix(const NullParams& null, const Eigen::VectorXd& t, const RhoMoments& rho) {
  rho.validate();
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(t.size(), t.size());
  for (int n = 1; n <= rho.n_max(); ++n) {
    const Eigen::VectorXd q = poly_vector(null, t, n);
    delta.noalias() += rho[n] * q * q.transpose();
  }
  return delta;
}

CorrelatedCovariance correlated_bin_cov(const Eigen::VectorXd& lambda, double total, const NullParams& null,
                                  const Eigen::VectorXd& t, const RhoMoments& rho) {
  if (lambda.size() != t.size()) throw_invalid("lambda and bin centres differ in length");
  if (!(total > 0.0)) throw_invalid("N must be positive");
  if ((lambda.array() < 0.0).any()) throw_invalid("expected counts must be nonnegative");
  null.validate();
  rho.validate();
  CorrelatedCovariance out;
  out.matrix = multinomial_cov(lambda, total).matrix;
  Eigen::MatrixXd extra = Eigen::MatrixXd::Zero(t.size(), t.size());
  double last_norm = 0.0;
  for (int n = 1; n <= rho.n_max(); ++n) {
    const Eigen::VectorXd w = lambda.cwiseProduct(poly_vector(null, t, n));
    const double c = (1.0 - 1.0 / total) * rho[n];
    extra.noalias() += c * w * w.transpose();
    last_norm = std::abs(c) * w.squaredNorm();  // ||c w w'||_F
  }
  out.matrix += extra;
  const double total_norm = extra.norm();
  out.truncation_ratio = total_norm > 0.0 ? last_norm / total_norm : 0.0;
  return out;
}

Eigen::VectorXd wing_vector(const Eigen::VectorXd& lambda, const Eigen::VectorXd& t, const NullParams& null,
                            int order) {
  if (order < 1) throw_invalid("wing order must be at least 1");
  if (lambda.size() != t.size()) throw_invalid("lambda and bin centres differ in length");
  null.validate();
  return lambda.cwiseProduct(poly_vector(null, t, order));
}

Eigen::VectorXd null_expected_counts(const NullFit& fit) {
  const NullParams null = fit.null();
  const HistogramSpec& spec = fit.spec();
  Eigen::VectorXd lambda(spec.num_bins);
  for (int k = 0; k < spec.num_bins; ++k) {
    const double t = spec.center(k);
    lambda(k) = null.in_support(t) ? fit.total() * spec.bin_width * null.density(t) : 0.0;
  }
  return lambda;
}

Eigen::VectorXd wing_vector(const NullFit& fit, int order) {
  return wing_vector(null_expected_counts(fit), fit.spec().centers(), fit.null(), order);
}

MeanCorrelationEstimate estimate_mean_correlation(const BinCovariance& perm_cov, const Eigen::VectorXd& wing) {
  const Eigen::MatrixXd& V = perm_cov.matrix;
  if (V.rows() != V.cols() || V.rows() != wing.size()) {
    throw_invalid("permutation covariance and wing vector sizes disagree");
  }
  if (V.rows() < 2) throw_invalid("need at least 2 bins");
  MeanCorrelationEstimate out;
  out.wing_norm2 = wing.squaredNorm();
  if (!(out.wing_norm2 > 0.0)) throw_numerical("wing vector has zero norm");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(V);
  if (eig.info() != Eigen::Success) throw_numerical("eigen-decomposition of the permutation covariance failed");
  const Eigen::Index K = V.rows();
  out.d1 = eig.eigenvalues()(K - 1);
  out.d2 = eig.eigenvalues()(K - 2);
  out.top_vector = eig.eigenvectors().col(K - 1);
  out.second_vector = eig.eigenvectors().col(K - 2);
  // Fix the sign so the top eigenvector points along the wing.
  if (out.top_vector.dot(wing) < 0.0) out.top_vector = -out.top_vector;
  out.ratio = out.d1 != 0.0 ? out.d2 / out.d1 : 0.0;
  out.cosine = std::abs(out.top_vector.dot(wing)) / std::sqrt(out.wing_norm2);
  out.estimate = out.d1 / out.wing_norm2;
  return out;
}

}  // namespace modematch
