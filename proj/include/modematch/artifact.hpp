#pragma once

// Versioned JSON document describing one fit.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modematch/covariance.hpp"
#include "modematch/histogram.hpp"
#include "modematch/nullfit.hpp"

namespace modematch {

inline constexpr int kArtifactSchemaVersion = 1;

struct ParameterCovariance {
  std::string source;  // multinomial, permutation, supplied, bootstrap
  int replicates = 0;
  int failures = 0;
  Eigen::MatrixXd cov_eta_plus;
  Eigen::MatrixXd cov_theta_plus;
};

struct Provenance {
  std::string input_digest;
  std::uint64_t input_count = 0;
  std::uint64_t seed = 0;
  std::string tool_version;
};

struct FitArtifact {
  int schema_version = kArtifactSchemaVersion;
  FamilySpec family;
  HistogramSpec histogram;
  int mask_first = 0;
  int mask_last = 0;
  double interval_lo = 0.0;
  double interval_hi = 0.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  std::uint64_t out_of_range = 0;
  std::vector<std::string> parameter_names;  // log_p0, then theta
  Eigen::VectorXd eta_plus;
  Eigen::VectorXd theta_plus;
  Eigen::VectorXd fitted;
  double overdispersion = 0.0;
  ConvergenceRecord convergence;
  CurvatureBound curvature;
  std::vector<ParameterCovariance> covariances;  // multinomial first
  Provenance provenance;

  friend bool operator==(const FitArtifact& a, const FitArtifact& b);
};

FitArtifact make_artifact(const PipelineResult& result, std::vector<ParameterCovariance> covariances,
                          Provenance provenance);

ParameterCovariance parameter_covariance(const FitCovariances& cov, const BinCovariance& vn);

/// Reconstructs the fit exactly as stored.
NullFit rebuild_fit(const FitArtifact& artifact);

std::string render_artifact(const FitArtifact& artifact);
/// Throws InvalidArgument on malformed input or a schema version other than the current one.
FitArtifact parse_artifact(const std::string& text);

}  // namespace modematch
