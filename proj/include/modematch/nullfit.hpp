#pragma once

// Mode matching: weighted log-linear Poisson regression of histogram counts on
// the sufficient statistics, restricted to the fitting interval.

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "modematch/expfam.hpp"
#include "modematch/histogram.hpp"

namespace modematch {

struct DesignMatrix {
  FamilySpec family;
  HistogramSpec spec;
  FitMask mask;
  double total = 0.0;        // N (1 for a density-scale geometry)
  Eigen::MatrixXd X;         // K x (dim+1), rows (1, x(t_k)'); zero outside the support
  Eigen::VectorXd offset;    // log(N Delta g0(t_k)); -inf outside the support
  Eigen::VectorXd weights;   // w, forced to 0 outside the support
  std::vector<bool> supported;

  int bins() const { return static_cast<int>(X.rows()); }
  int params() const { return static_cast<int>(X.cols()); }
  /// exp(X eta_plus + h), 0 outside the support.
  Eigen::VectorXd mean(const Eigen::VectorXd& eta_plus) const;
};

/// Throws if a masked-in bin lies outside the family's support.
DesignMatrix build_design(const HistogramSpec& spec, double total, const FamilySpec& family,
                          const FitMask& mask);
inline DesignMatrix build_design(const Histogram& h, const FamilySpec& family, const FitMask& mask) {
  return build_design(h.spec, static_cast<double>(h.total), family, mask);
}

struct PoissonSolution {
  Eigen::VectorXd beta;
  int iterations = 0;
  double deviance = 0.0;
  double score_norm = 0.0;  // ||X'W(y - mu)||_inf
};

struct SolverOptions {
  int max_iterations = 50;
  double deviance_tolerance = 1e-10;
  double score_tolerance = 1e-8;  // relative to max(1, ||X'Wy||_inf)
};

/// Weighted Poisson MLE with log link and offset, by IRLS from a log-linear
/// least-squares start. Throws Numerical on rank deficiency or non-convergence.
PoissonSolution solve_poisson(const DesignMatrix& dm, const Eigen::VectorXd& y,
                              const SolverOptions& options = {});

struct ConvergenceRecord {
  int iterations = 0;
  double score_norm = 0.0;
  double deviance = 0.0;
};

struct NullFit {
  DesignMatrix design;
  Eigen::VectorXd counts;       // y
  CanonicalParams canonical;    // (C, eta)
  UsualParams usual;            // (log p0, theta)
  Eigen::VectorXd fitted;       // yhat over all K bins
  Eigen::VectorXd alternative;  // y - yhat
  double overdispersion = 0.0;
  ConvergenceRecord convergence;

  const FamilySpec& family() const { return design.family; }
  const HistogramSpec& spec() const { return design.spec; }
  const FitMask& mask() const { return design.mask; }
  double total() const { return design.total; }
  double p0() const;
  NullParams null() const { return null_params(design.family, usual.theta); }
};

NullFit fit_null(const DesignMatrix& dm, const Eigen::VectorXd& y, const SolverOptions& options = {});

/// (1/K0) sum over masked-in bins of (y - yhat)^2 / yhat.
double overdispersion(const NullFit& fit);

struct DensityPrediction {
  std::vector<double> null_density;    // p0 f0(t) at the requested points
  Eigen::VectorXd alternative_density;  // (y - yhat)/(N Delta) at the bin centers
};

DensityPrediction predict_density(const NullFit& fit, std::span<const double> t);

/// Tuning choices for the ingest-to-fit pipeline; unset values get defaults
/// derived from the data.
struct FitConfig {
  FamilySpec family = FamilySpec::normal();
  std::optional<double> bin_width;
  std::optional<double> origin;
  std::optional<int> num_bins;
  std::optional<std::pair<double, double>> interval;
};

struct ResolvedGeometry {
  HistogramSpec spec;
  FitMask mask;
};

/// Fills defaults: Delta = 0.1 times a robust scale (two significant digits);
/// origin 0 for chi-square, otherwise a bin centred on the median; K covering
/// the data; S0 = median +- 1.5 robust SD (normal) or [0, 90th percentile].
ResolvedGeometry resolve_geometry(std::span<const double> statistics, const FitConfig& config);

struct PipelineResult {
  Histogram histogram;
  NullFit fit;
};

PipelineResult run_pipeline(std::span<const double> statistics, const FamilySpec& family,
                             const ResolvedGeometry& geometry);
PipelineResult run_pipeline(std::span<const double> statistics, const FitConfig& config);

}  // namespace modematch
