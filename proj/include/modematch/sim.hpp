#pragma once

// Monte Carlo drivers: mixture sampling, tuning sweeps over the bin width or
// the fitting interval, and the bias of fdr estimates under Poisson counts.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modematch/bias.hpp"

namespace modematch {

/// N independent draws: null with probability p0, otherwise alternative.
std::vector<double> generate(const MixtureScenario& scenario, int N, std::mt19937_64& rng);
std::vector<double> generate(const MixtureScenario& scenario, int N, std::uint64_t seed);

enum class SweepAxis { BinWidth, FitInterval };

struct SweepConfig {
  MixtureScenario scenario;
  int N = 10000;
  int reps = 100;
  SweepAxis axis = SweepAxis::FitInterval;
  std::vector<double> grid;
  double fixed_other = 0.1;  // t0 when sweeping Delta, Delta when sweeping t0
  std::uint64_t seed = 1;
  int threads = 0;

  void validate() const;
};

struct ParameterSummary {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // population variance over successful replicates
  double sd = 0.0;
  double bias = 0.0;
  double mse = 0.0;       // mean squared error about the truth
  double mean_se = 0.0;   // average delta-method SE
  double coverage = 0.0;  // share of 95% intervals covering the truth
};

struct SweepPoint {
  double value = 0.0;  // grid value
  double delta = 0.0;
  double t0 = 0.0;
  int successes = 0;
  int failures = 0;
  std::vector<ParameterSummary> params;  // (log p0, theta...)
};

struct SweepResult {
  std::vector<SweepPoint> points;
};

/// Replicate r at grid index g draws from the stream keyed by (seed, g, r).
SweepResult run_sweep(const SweepConfig& cfg);

struct CurveSummary {
  Eigen::VectorXd mean;  // over replicates where the estimate is defined
  Eigen::VectorXd se;    // Monte Carlo SE of the mean
  Eigen::VectorXd sd;
  Eigen::VectorXd p05;   // percentiles from the first min(reps, 10^4) replicates
  Eigen::VectorXd p95;
  std::vector<long> defined;
};

struct FdrBiasConfig {
  MixtureScenario scenario;
  int N = 10000;
  int reps = 1000;
  double delta = 0.1;
  double t0 = 1.0;
  bool empirical_null = false;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct FdrBiasResult {
  Eigen::VectorXd centers;
  Eigen::VectorXd lambda;       // N Delta f(t_k)
  Eigen::VectorXd lambda_null;  // N Delta p0 f0(t_k)
  Eigen::VectorXd fdr_true;
  Eigen::VectorXd fdr_zeta;     // fdr_k zeta(lambda_k)
  Eigen::VectorXd right_true;
  CurveSummary local;
  CurveSummary right;
  int failures = 0;
  FitMask mask;
};

/// Bin counts y_k ~ Poisson(lambda_k) per replicate; fdr estimated with the
/// true null (known) or a refitted one (empirical).
FdrBiasResult fdr_bias_experiment(const FdrBiasConfig& cfg);

}  // namespace modematch
