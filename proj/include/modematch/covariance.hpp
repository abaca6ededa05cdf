#pragma once

// Delta-method covariances of the fitted parameters and curves, with a
// pluggable covariance for the bin counts.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "modematch/nullfit.hpp"

namespace modematch {

enum class CovSource { Multinomial, Overdispersed, Bootstrap, Permutation, Supplied };

const char* to_string(CovSource source);

struct BinCovariance {
  Eigen::MatrixXd matrix;  // K x K
  CovSource source = CovSource::Multinomial;
  int replicates = 0;
};

/// Diag(yhat) - yhat yhat'/N.
BinCovariance multinomial_cov(const Eigen::VectorXd& fitted, double total);
BinCovariance multinomial_cov(const NullFit& fit);

/// phi-hat times the multinomial covariance.
BinCovariance overdispersed_cov(const NullFit& fit);

struct FitCovariances {
  Eigen::MatrixXd cov_eta_plus;    // (dim+1)^2
  Eigen::MatrixXd cov_theta_plus;  // D cov_eta_plus D'
  Eigen::MatrixXd sensitivity;     // G = (X'WVX)^-1 X'W, (dim+1) x K
  Eigen::MatrixXd D_y;             // X G, K x K
  Eigen::MatrixXd cov_fitted;      // (V D_y) Vn (V D_y)'
  Eigen::MatrixXd cov_alternative; // (I - V D_y) Vn (I - V D_y)'

  Eigen::VectorXd se_theta_plus() const { return cov_theta_plus.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// G = (X'W Diag(yhat) X)^-1 X'W. Throws Numerical when the bread is singular.
Eigen::MatrixXd fit_sensitivity(const NullFit& fit);

FitCovariances param_cov(const NullFit& fit, const BinCovariance& vn);

/// Sample covariance (divisor rows - 1) of the rows of `samples`.
Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& samples);

/// Covariance across replicate histograms, one row per replicate.
BinCovariance permutation_cov(const std::vector<std::vector<double>>& replicate_counts);

struct BootstrapResult {
  BinCovariance bins;
  Eigen::MatrixXd cov_theta_plus;
  Eigen::MatrixXd cov_eta_plus;
  int requested = 0;
  int failures = 0;
};

/// Resamples the statistics B times with replacement, re-bins on the same
/// geometry and refits. Replicate r draws from its own stream keyed by (seed, r),
/// so the result does not depend on `threads`. Throws when more than 10% of
/// replicates fail to fit.
BootstrapResult bootstrap_cov(std::span<const double> statistics, const FamilySpec& family,
                              const ResolvedGeometry& geometry, int B, std::uint64_t seed,
                              int threads = 0);

/// Symmetric and nonnegative diagonal within the given slack.
bool is_valid_covariance(const Eigen::MatrixXd& m, double tol = 1e-10);

}  // namespace modematch
