#pragma once

// Correlation effects on bin counts: Lancaster bivariate expansions in the
// orthonormal polynomials of the null, the resulting count covariance, and
// the "wing" vectors it is built from.

#include <vector>

#include <Eigen/Dense>

#include "modematch/covariance.hpp"
#include "modematch/expfam.hpp"
#include "modematch/nullfit.hpp"

namespace modematch {

/// Raw moments E(rho), E(rho^2), ..., E(rho^n_max) of the pairwise correlations.
struct RhoMoments {
  std::vector<double> moments;

  int n_max() const { return static_cast<int>(moments.size()); }
  double operator[](int n) const { return moments[n - 1]; }  // 1-based order
  void validate() const;

  /// Every pair shares correlation rho: E(rho^n) = rho^n.
  static RhoMoments constant(double rho, int n_max);
};

/// n-th polynomial of the null, orthonormal under f0 with positive leading
/// coefficient: He_n(z)/sqrt(n!) for a normal null, z = (t - mu)/sigma;
/// for a*chi2(nu) the Laguerre polynomial in u = t/(2a) scaled to unit norm.
double orthonormal_polynomial(const NullParams& null, int n, double t);

/// f0(ti) f0(tj) sum_{n=0}^{n_max} rho^n q_n(ti) q_n(tj).
double lancaster_density(const NullParams& null, double rho, double ti, double tj, int n_max);

/// sum_{n=1}^{n_max} E(rho^n) q_n q_n' at the given points.
Eigen::MatrixXd delta_matrix(const NullParams& null, const Eigen::VectorXd& t, const RhoMoments& rho);

struct CorrelatedCovariance {
  Eigen::MatrixXd matrix;
  /// Frobenius norm of the last retained order relative to the whole correlation term.
  double truncation_ratio = 0.0;
};

/// [Diag(lambda) - lambda lambda'/N] + (1 - 1/N) Diag(lambda) delta Diag(lambda).
CorrelatedCovariance correlated_bin_cov(const Eigen::VectorXd& lambda, double total, const NullParams& null,
                                  const Eigen::VectorXd& t, const RhoMoments& rho);

/// Diag(lambda) q_n(t).
Eigen::VectorXd wing_vector(const Eigen::VectorXd& lambda, const Eigen::VectorXd& t, const NullParams& null,
                            int order);

/// Null expected counts N Delta f0-hat(t_k) of a fit (zero outside the support).
Eigen::VectorXd null_expected_counts(const NullFit& fit);

/// Wing vector of a fit, using its null expected counts.
Eigen::VectorXd wing_vector(const NullFit& fit, int order);

struct MeanCorrelationEstimate {
  double estimate = 0.0;   // d1 / ||w||^2
  double d1 = 0.0;
  double d2 = 0.0;
  double ratio = 0.0;      // d2 / d1
  double cosine = 0.0;     // |<top eigenvector, w/||w||>|
  double wing_norm2 = 0.0;
  Eigen::VectorXd top_vector;
  Eigen::VectorXd second_vector;
};

/// Rank-one reading of the permutation covariance, cov ~ E(rho) w w'.
/// Biased upward through the sorting of d1.
MeanCorrelationEstimate estimate_mean_correlation(const BinCovariance& perm_cov, const Eigen::VectorXd& wing);

}  // namespace modematch
