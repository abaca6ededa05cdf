#pragma once

// Local and tail false discovery rates from a fitted null, their log-scale
// delta-method covariances, and the zeta bias diagnostic.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "modematch/covariance.hpp"
#include "modematch/nullfit.hpp"

namespace modematch {

/// Per-bin value that is absent where its denominator is zero.
using MaybeVector = std::vector<std::optional<double>>;

enum class TailSide { Right, Left };

/// K x K upper triangular with 1/2 on the diagonal and 1 above it.
Eigen::MatrixXd cumulation_matrix(int K);

/// Cumulation along one side: (S v) for Right, (S' v) for Left, in O(K).
Eigen::VectorXd cumulate(const Eigen::VectorXd& v, TailSide side);

/// yhat_k / y_k where y_k > 0.
MaybeVector local_fdr(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted);
inline MaybeVector local_fdr(const NullFit& fit) { return local_fdr(fit.counts, fit.fitted); }

/// (S yhat)_k / (S y)_k (S' for the left tail) where (S y)_k > 0.
MaybeVector tail_fdr(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted, TailSide side);
inline MaybeVector tail_fdr(const NullFit& fit, TailSide side) {
  return tail_fdr(fit.counts, fit.fitted, side);
}

/// d log(estimate) / d y' for each curve. Rows of undefined bins are zero.
struct FdrSensitivities {
  Eigen::MatrixXd local;  // A = D_y - Diag(y)^-1
  Eigen::MatrixXd right;  // B = Uhat^-1 S Vhat D_y - U^-1 S
  Eigen::MatrixXd left;   // same with S'
};

FdrSensitivities fdr_sensitivities(const NullFit& fit, const Eigen::MatrixXd& D_y);

struct FdrCovariances {
  Eigen::MatrixXd local;
  Eigen::MatrixXd right;
  Eigen::MatrixXd left;
};

FdrCovariances fdr_covariances(const NullFit& fit, const Eigen::MatrixXd& D_y, const BinCovariance& vn);
FdrCovariances fdr_covariances(const NullFit& fit, const BinCovariance& vn);

/// zeta(lambda) = E(lambda / y | y > 0) for y ~ Poisson(lambda).
double zeta(double lambda);

/// zeta(yhat_k) per bin; 0 where yhat_k = 0.
Eigen::VectorXd expected_null_fdr(const NullFit& fit);

/// fdr_k / zeta(yhat_k).
MaybeVector adjusted_local_fdr(const NullFit& fit);

/// exp(X (eta_limit - eta_true)) per bin, from augmented canonical vectors.
Eigen::VectorXd asymptotic_fdr_bias_factor(const Eigen::MatrixXd& X, const Eigen::VectorXd& eta_limit,
                                           const Eigen::VectorXd& eta_true);

struct FdrBand {
  MaybeVector estimate;
  MaybeVector lo;
  MaybeVector hi;
};

struct FdrResult {
  FdrBand local;
  FdrBand right;
  FdrBand left;
  FdrCovariances log_cov;
  Eigen::VectorXd zeta_expected_null;
  MaybeVector adjusted_local;
  /// Local fdr CI upper end below the complete-null expectation.
  std::vector<bool> below_null;
};

/// Bands are exp(log estimate +- z SE).
FdrResult compute_fdr(const NullFit& fit, const BinCovariance& vn, double z = 1.959963984540054);

}  // namespace modematch
