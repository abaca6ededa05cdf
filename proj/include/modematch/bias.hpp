#pragma once

// Large-N bias of the mode-matching fit under a two-class mixture: the
// deterministic limit of the estimator and its first-order approximation.

#include <random>
#include <string>

#include <Eigen/Dense>

#include "modematch/nullfit.hpp"

namespace modematch {

struct AlternativeSpec {
  enum class Kind { Normal, NoncentralChiSq };

  Kind kind = Kind::Normal;
  // Normal: (mean, variance, unused); NoncentralChiSq: (scale, df, noncentrality).
  double first = 0.0;
  double second = 1.0;
  double third = 0.0;

  static AlternativeSpec normal(double mean, double variance) { return {Kind::Normal, mean, variance, 0.0}; }
  static AlternativeSpec noncentral_chisq(double df, double noncentrality, double scale = 1.0) {
    return {Kind::NoncentralChiSq, scale, df, noncentrality};
  }

  void validate() const;
  double density(double t) const;
  double mean() const;
  double sample(std::mt19937_64& rng) const;
};

struct MixtureScenario {
  double p0 = 1.0;
  FamilySpec family = FamilySpec::normal();
  NullParams null = NullParams::normal(0.0, 1.0);
  AlternativeSpec alternative;
  std::string label;

  void validate() const;
  double mixture_density(double t) const;
  /// (log p0, theta) of the true null.
  UsualParams truth() const;
};

/// f0 = N(0.2, 1.2^2), fA = N(3, 1.2^2).
MixtureScenario normal_scenario(double p0);
/// f0 = 0.8 chi2(3), fA = noncentral chi2(3, 3).
MixtureScenario chisq_scenario(double p0);

/// Histogram geometry with bin width `delta` and fitting interval
/// [0.2 - t0, 0.2 + t0] (normal) or [0, t0] (chi-square), bins aligned to the
/// interval's anchor and covering the bulk of both mixture components.
ResolvedGeometry scenario_geometry(const MixtureScenario& scenario, double delta, double t0);

/// Solution of the limiting score equation with counts replaced by the exact
/// mixture density at the bin centres. Returns the augmented canonical vector.
Eigen::VectorXd limiting_fit(const MixtureScenario& scenario, const ResolvedGeometry& geometry);

struct BiasApproximation {
  Eigen::VectorXd eta_scale;
  Eigen::VectorXd theta_scale;
};

/// (1 - p0)(X'W Diag(f0) X)^-1 X'W (fA - f0) - (log p0, 0')', mapped to the
/// usual scale with D evaluated at `eta_at` (augmented canonical).
BiasApproximation bias_approximation(const MixtureScenario& scenario, const ResolvedGeometry& geometry,
                                     const Eigen::VectorXd& eta_at);

struct AsymptoticBias {
  Eigen::VectorXd eta_true;     // augmented canonical truth
  Eigen::VectorXd theta_true;   // (log p0, theta)
  Eigen::VectorXd eta_limit;
  Eigen::VectorXd theta_limit;
  Eigen::VectorXd bias_exact;   // theta_limit - theta_true
  Eigen::VectorXd bias_approx;  // usual scale, D at the limit
  Eigen::VectorXd bias_approx_eta;
};

AsymptoticBias asymptotic_bias(const MixtureScenario& scenario, const ResolvedGeometry& geometry);

/// Design of `geometry` on the density scale (N Delta = 1).
DesignMatrix scenario_design(const MixtureScenario& scenario, const ResolvedGeometry& geometry);

}  // namespace modematch
