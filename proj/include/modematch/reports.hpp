#pragma once

// Flat CSV and JSON renderings of results. Numbers use 17 significant digits;
// undefined entries are written as NA.

#include <string>
#include <vector>

#include "modematch/bias.hpp"
#include "modematch/correlation.hpp"
#include "modematch/fdr.hpp"
#include "modematch/sim.hpp"

namespace modematch {

std::string format_number(double x);

struct FdrCsvOptions {
  bool adjust_zeta = false;
  bool cap_at_one = false;  // presentation only
};

/// t, y, yhat, local/right/left fdr with CI columns, and optionally
/// zeta_null, fdr_adjusted, below_null.
std::string fdr_csv(const NullFit& fit, const FdrResult& result, const FdrCsvOptions& options = {});

/// parameter, theta_plus, theta_limit, bias_exact, bias_approx.
std::string bias_csv(const FamilySpec& family, const AsymptoticBias& bias);

/// One row per grid point per parameter.
std::string sweep_csv(const SweepResult& result);

/// Per-bin curves of an fdr bias experiment.
std::string fdr_bias_csv(const FdrBiasResult& result);

struct WingReport {
  Eigen::VectorXd centers;
  std::vector<int> orders;
  std::vector<Eigen::VectorXd> wings;
  bool has_estimate = false;
  MeanCorrelationEstimate estimate;
};

std::string wing_json(const WingReport& report);
std::string wing_csv(const WingReport& report);

}  // namespace modematch
