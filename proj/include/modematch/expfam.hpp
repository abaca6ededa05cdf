#pragma once

// Exponential families and subfamilies used as empirical nulls.
//
// Each family is written as f0(t) = g0(t) exp(x(t)'eta - psi(eta)). The
// augmented canonical vector is (C, eta) with C = log p0 - psi(eta); the
// augmented usual vector is (log p0, theta).

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "modematch/special_functions.hpp"

namespace modematch {

enum class NullBase { Normal, ChiSq };

/// Fully specified null density: Normal(mean = first, variance = second) or
/// scaled chi-square (scale a = first, df nu = second).
struct NullParams {
  NullBase base = NullBase::Normal;
  double first = 0.0;
  double second = 1.0;

  static NullParams normal(double mean, double variance) { return {NullBase::Normal, mean, variance}; }
  static NullParams chisq(double scale, double df) { return {NullBase::ChiSq, scale, df}; }

  void validate() const;
  double density(double t) const;
  double log_density(double t) const;
  double second_derivative(double t) const;
  double mode() const;
  bool in_support(double t) const { return base == NullBase::Normal || t > 0.0; }
};

enum class FamilyKind {
  NormalFull,
  NormalMeanOnly,
  NormalVarOnly,
  ChiSqFull,
  ChiSqScaleOnly,
  ChiSqDfOnly,
  InterceptOnly,
};

struct FamilySpec {
  FamilyKind kind = FamilyKind::NormalFull;
  // Values for the parameters that are not estimated. Only the entries the
  // kind fixes are consulted; InterceptOnly consults both.
  NullParams fixed = NullParams::normal(0.0, 1.0);

  static FamilySpec normal();
  static FamilySpec normal_mean_only(double variance);
  static FamilySpec normal_var_only(double mean);
  static FamilySpec chisq();
  static FamilySpec chisq_scale_only(double df);
  static FamilySpec chisq_df_only(double scale);
  static FamilySpec intercept_only(const NullParams& null);

  /// Builds a family from a CLI selector (`normal`, `normal:mean`, `normal:var`,
  /// `chisq`, `chisq:scale`, `chisq:df`, `p0only`) and fixed values keyed by
  /// `mean`, `var`, `scale` or `df`.
  static FamilySpec parse(std::string_view selector, const std::map<std::string, double>& fixed_values);

  NullBase base() const { return fixed.base; }
  /// Number of free canonical parameters, excluding the intercept.
  int dim() const;
  std::string selector() const;
  std::vector<std::string> theta_names() const;
  bool in_support(double t) const { return fixed.in_support(t); }
  void validate() const;

  friend bool operator==(const FamilySpec& a, const FamilySpec& b) {
    return a.kind == b.kind && a.fixed.base == b.fixed.base && a.fixed.first == b.fixed.first &&
           a.fixed.second == b.fixed.second;
  }
};

struct UsualParams {
  double log_p0 = 0.0;
  Eigen::VectorXd theta;

  /// (log p0, theta)
  Eigen::VectorXd augmented() const;
};

struct CanonicalParams {
  double intercept = 0.0;
  Eigen::VectorXd eta;

  /// (C, eta)
  Eigen::VectorXd augmented() const;
  static CanonicalParams from_augmented(const Eigen::VectorXd& eta_plus);
};

/// x(t); throws InvalidArgument for t outside the support.
Eigen::VectorXd sufficient_vector(const FamilySpec& spec, double t);

/// log g0(t).
double log_carrier(const FamilySpec& spec, double t);

/// Contribution of the fixed (non-estimated) canonical terms to log f0(t),
/// excluding the carrier. Nonzero only for InterceptOnly.
double fixed_log_term(const FamilySpec& spec, double t);

/// psi(eta); throws InvalidArgument outside the natural parameter domain.
double cumulant(const FamilySpec& spec, const Eigen::VectorXd& eta);

UsualParams theta_from_eta(const FamilySpec& spec, const CanonicalParams& canonical);
CanonicalParams eta_from_theta(const FamilySpec& spec, const UsualParams& usual);

/// d(log p0, theta) / d(C, eta)', the (dim+1) x (dim+1) delta-method Jacobian.
Eigen::MatrixXd jacobian_D(const FamilySpec& spec, const CanonicalParams& canonical);

/// Full null parameters implied by the free parameters `theta` plus the fixed ones.
NullParams null_params(const FamilySpec& spec, const Eigen::VectorXd& theta);

/// f0(t) under `theta`, evaluated through the exponential-family form.
double density(const FamilySpec& spec, const Eigen::VectorXd& theta, double t);

/// Input distributions accepted by quantile_transform: StudentT maps to N(0,1),
/// FisherF(d1, d2) maps to chi-square(d1).
std::vector<double> quantile_transform(const special::Distribution& input,
                                       std::span<const double> statistics);

}  // namespace modematch
