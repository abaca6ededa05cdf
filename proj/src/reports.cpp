#include "modematch/reports.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace modematch {

namespace {

std::string cell(const std::optional<double>& v, bool cap = false) {
  if (!v) return "NA";
  return format_number(cap ? std::min(*v, 1.0) : *v);
}

std::string cell(double v) { return std::isnan(v) ? "NA" : format_number(v); }

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  if (x == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fdr_csv(const NullFit& fit, const FdrResult& r, const FdrCsvOptions& options) {
  std::ostringstream os;
  os << "t,y,yhat,fdr_local,fdr_local_lo,fdr_local_hi,fdr_right,fdr_right_lo,fdr_right_hi,"
        "fdr_left,fdr_left_lo,fdr_left_hi";
  if (options.adjust_zeta) os << ",zeta_null,fdr_adjusted,below_null";
  os << "\n";
  const bool cap = options.cap_at_one;
  const Eigen::VectorXd t = fit.spec().centers();
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    os << format_number(t(k)) << ',' << format_number(fit.counts(k)) << ',' << format_number(fit.fitted(k)) << ','
       << cell(r.local.estimate[i], cap) << ',' << cell(r.local.lo[i], cap) << ',' << cell(r.local.hi[i], cap) << ','
       << cell(r.right.estimate[i], cap) << ',' << cell(r.right.lo[i], cap) << ',' << cell(r.right.hi[i], cap) << ','
       << cell(r.left.estimate[i], cap) << ',' << cell(r.left.lo[i], cap) << ',' << cell(r.left.hi[i], cap);
    if (options.adjust_zeta) {
      os << ',' << format_number(r.zeta_expected_null(k)) << ',' << cell(r.adjusted_local[i], cap) << ','
         << (r.below_null[i] ? 1 : 0);
    }
    os << "\n";
  }
  return os.str();
}

std::string bias_csv(const FamilySpec& family, const AsymptoticBias& b) {
  std::vector<std::string> names{"log_p0"};
  for (const auto& n : family.theta_names()) names.push_back(n);
  std::ostringstream os;
  os << "parameter,theta_plus,theta_limit,bias_exact,bias_approx\n";
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    os << names[j] << ',' << format_number(b.theta_true(i)) << ',' << format_number(b.theta_limit(i)) << ','
       << format_number(b.bias_exact(i)) << ',' << format_number(b.bias_approx(i)) << "\n";
  }
  return os.str();
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "grid_value,bin_width,t0,parameter,truth,mean,sd,bias,mse,mean_se,coverage,successes,failures\n";
  for (const auto& p : result.points) {
    for (const auto& s : p.params) {
      os << format_number(p.value) << ',' << format_number(p.delta) << ',' << format_number(p.t0) << ',' << s.name << ','
         << format_number(s.truth) << ',' << format_number(s.mean) << ',' << format_number(s.sd) << ','
         << format_number(s.bias) << ',' << format_number(s.mse) << ',' << format_number(s.mean_se) << ','
         << format_number(s.coverage) << ',' << p.successes << ',' << p.failures << "\n";
    }
  }
  return os.str();
}

std::string fdr_bias_csv(const FdrBiasResult& r) {
  std::ostringstream os;
  os << "t,in_fit_interval,lambda,lambda_null,fdr_true,fdr_zeta,fdr_mean,fdr_se,fdr_sd,fdr_p05,fdr_p95,fdr_defined,"
        "fdr_right_true,fdr_right_mean,fdr_right_se,fdr_right_sd,fdr_right_p05,fdr_right_p95\n";
  for (Eigen::Index k = 0; k < r.centers.size(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    os << format_number(r.centers(k)) << ',' << (r.mask.selected(static_cast<int>(k)) ? 1 : 0) << ','
       << format_number(r.lambda(k)) << ',' << format_number(r.lambda_null(k)) << ',' << format_number(r.fdr_true(k))
       << ',' << format_number(r.fdr_zeta(k)) << ',' << cell(r.local.mean(k)) << ',' << cell(r.local.se(k)) << ','
       << cell(r.local.sd(k)) << ',' << cell(r.local.p05(k)) << ',' << cell(r.local.p95(k)) << ','
       << r.local.defined[i] << ',' << format_number(r.right_true(k)) << ',' << cell(r.right.mean(k)) << ','
       << cell(r.right.se(k)) << ',' << cell(r.right.sd(k)) << ',' << cell(r.right.p05(k)) << ','
       << cell(r.right.p95(k)) << "\n";
  }
  return os.str();
}

std::string wing_json(const WingReport& report) {
  nlohmann::json j;
  j["centers"] = vec_json(report.centers);
  nlohmann::json wings = nlohmann::json::array();
  for (std::size_t i = 0; i < report.orders.size(); ++i) {
    wings.push_back({{"order", report.orders[i]}, {"vector", vec_json(report.wings[i])}});
  }
  j["wings"] = std::move(wings);
  if (report.has_estimate) {
    const auto& e = report.estimate;
    j["permutation"] = {{"d1", e.d1},
                        {"d2", e.d2},
                        {"d2_over_d1", e.ratio},
                        {"wing_norm2", e.wing_norm2},
                        {"mean_correlation", e.estimate},
                        {"cosine_similarity", e.cosine},
                        {"top_eigenvector", vec_json(e.top_vector)},
                        {"second_eigenvector", vec_json(e.second_vector)}};
  }
  return j.dump(2) + "\n";
}

std::string wing_csv(const WingReport& report) {
  std::ostringstream os;
  os << "t";
  for (int n : report.orders) os << ",wing_" << n;
  if (report.has_estimate) os << ",eigvec_1,eigvec_2";
  os << "\n";
  for (Eigen::Index k = 0; k < report.centers.size(); ++k) {
    os << format_number(report.centers(k));
    for (const auto& w : report.wings) os << ',' << format_number(w(k));
    if (report.has_estimate) {
      os << ',' << format_number(report.estimate.top_vector(k)) << ',' << format_number(report.estimate.second_vector(k));
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace modematch
