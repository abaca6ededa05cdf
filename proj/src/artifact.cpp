#include "modematch/artifact.hpp"

#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "modematch/error.hpp"

namespace modematch {

using json = nlohmann::ordered_json;

namespace {

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::VectorXd json_vec(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a.at(i).get<double>();
  return v;
}

Eigen::MatrixXd json_mat(const json& rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n ? rows.at(0).size() : 0;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows.at(i).size() != m) throw_invalid("ragged matrix in artifact");
    for (std::size_t j = 0; j < m; ++j) out(i, j) = rows.at(i).at(j).get<double>();
  }
  return out;
}

bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

}  // namespace

bool operator==(const FitArtifact& a, const FitArtifact& b) {
  auto same_cov = [](const ParameterCovariance& x, const ParameterCovariance& y) {
    return x.source == y.source && x.replicates == y.replicates && x.failures == y.failures &&
           same(x.cov_eta_plus, y.cov_eta_plus) && same(x.cov_theta_plus, y.cov_theta_plus);
  };
  if (a.covariances.size() != b.covariances.size()) return false;
  for (std::size_t i = 0; i < a.covariances.size(); ++i) {
    if (!same_cov(a.covariances[i], b.covariances[i])) return false;
  }
  return a.schema_version == b.schema_version && a.family == b.family && a.histogram == b.histogram &&
         a.mask_first == b.mask_first && a.mask_last == b.mask_last && a.interval_lo == b.interval_lo &&
         a.interval_hi == b.interval_hi && a.counts == b.counts && a.total == b.total &&
         a.out_of_range == b.out_of_range && a.parameter_names == b.parameter_names &&
         same(a.eta_plus, b.eta_plus) && same(a.theta_plus, b.theta_plus) && same(a.fitted, b.fitted) &&
         a.overdispersion == b.overdispersion && a.convergence.iterations == b.convergence.iterations &&
         a.convergence.score_norm == b.convergence.score_norm && a.convergence.deviance == b.convergence.deviance &&
         a.curvature.max_over_bins == b.curvature.max_over_bins && a.curvature.argmax == b.curvature.argmax &&
         a.curvature.at_mode == b.curvature.at_mode && a.curvature.unbounded == b.curvature.unbounded &&
         a.provenance.input_digest == b.provenance.input_digest &&
         a.provenance.input_count == b.provenance.input_count && a.provenance.seed == b.provenance.seed &&
         a.provenance.tool_version == b.provenance.tool_version;
}

ParameterCovariance parameter_covariance(const FitCovariances& cov, const BinCovariance& vn) {
  return {to_string(vn.source), vn.replicates, 0, cov.cov_eta_plus, cov.cov_theta_plus};
}

FitArtifact make_artifact(const PipelineResult& result, std::vector<ParameterCovariance> covariances,
                          Provenance provenance) {
  const NullFit& fit = result.fit;
  FitArtifact a;
  a.family = fit.family();
  a.histogram = fit.spec();
  a.mask_first = fit.mask().first;
  a.mask_last = fit.mask().last;
  a.interval_lo = fit.mask().lo;
  a.interval_hi = fit.mask().hi;
  a.counts = result.histogram.counts;
  a.total = result.histogram.total;
  a.out_of_range = result.histogram.out_of_range;
  a.parameter_names.push_back("log_p0");
  for (const auto& n : fit.family().theta_names()) a.parameter_names.push_back(n);
  a.eta_plus = fit.canonical.augmented();
  a.theta_plus = fit.usual.augmented();
  a.fitted = fit.fitted;
  a.overdispersion = fit.overdispersion;
  a.convergence = fit.convergence;
  a.curvature = curvature_bias_bound(fit.null(), fit.spec(), &fit.mask());
  a.covariances = std::move(covariances);
  a.provenance = std::move(provenance);
  return a;
}

NullFit rebuild_fit(const FitArtifact& a) {
  const FitMask mask = mask_from_range(a.histogram, a.mask_first, a.mask_last);
  NullFit fit;
  fit.design = build_design(a.histogram, static_cast<double>(a.total), a.family, mask);
  const int K = a.histogram.num_bins;
  if (static_cast<int>(a.counts.size()) != K || a.fitted.size() != K) throw_invalid("artifact bin counts disagree");
  fit.counts.resize(K);
  for (int k = 0; k < K; ++k) fit.counts(k) = static_cast<double>(a.counts[k]);
  fit.canonical = CanonicalParams::from_augmented(a.eta_plus);
  fit.usual = theta_from_eta(a.family, fit.canonical);
  // Keep the stored values so downstream curves match the original run bit for bit.
  fit.usual.log_p0 = a.theta_plus(0);
  fit.usual.theta = a.theta_plus.tail(a.theta_plus.size() - 1);
  fit.fitted = a.fitted;
  fit.alternative = fit.counts - fit.fitted;
  fit.overdispersion = a.overdispersion;
  fit.convergence = a.convergence;
  return fit;
}

std::string render_artifact(const FitArtifact& a) {
  json j;
  j["schema_version"] = a.schema_version;
  j["family"] = {{"selector", a.family.selector()},
                 {"null_base", a.family.base() == NullBase::Normal ? "normal" : "chisq"},
                 {"fixed_first", a.family.fixed.first},
                 {"fixed_second", a.family.fixed.second}};
  j["histogram"] = {{"origin", a.histogram.origin},
                    {"bin_width", a.histogram.bin_width},
                    {"num_bins", a.histogram.num_bins},
                    {"counts", a.counts},
                    {"total", a.total},
                    {"out_of_range", a.out_of_range}};
  j["fit_interval"] = {{"lo", a.interval_lo}, {"hi", a.interval_hi}, {"first_bin", a.mask_first}, {"last_bin", a.mask_last}};
  j["parameters"] = {{"names", a.parameter_names}, {"eta_plus", vec_json(a.eta_plus)}, {"theta_plus", vec_json(a.theta_plus)}};
  j["fitted_counts"] = vec_json(a.fitted);
  j["overdispersion"] = a.overdispersion;
  j["convergence"] = {{"iterations", a.convergence.iterations},
                      {"score_norm", a.convergence.score_norm},
                      {"deviance", a.convergence.deviance}};
  j["curvature"] = {{"max_over_bins", a.curvature.unbounded ? json(nullptr) : json(a.curvature.max_over_bins)},
                    {"argmax", a.curvature.argmax},
                    {"at_mode", std::isfinite(a.curvature.at_mode) ? json(a.curvature.at_mode) : json(nullptr)},
                    {"unbounded", a.curvature.unbounded}};
  json covs = json::array();
  for (const auto& c : a.covariances) {
    covs.push_back({{"source", c.source},
                    {"replicates", c.replicates},
                    {"failures", c.failures},
                    {"cov_eta_plus", mat_json(c.cov_eta_plus)},
                    {"cov_theta_plus", mat_json(c.cov_theta_plus)}});
  }
  j["covariances"] = std::move(covs);
  j["provenance"] = {{"input_digest", a.provenance.input_digest},
                     {"input_count", a.provenance.input_count},
                     {"seed", a.provenance.seed},
                     {"tool_version", a.provenance.tool_version}};
  return j.dump(2) + "\n";
}

FitArtifact parse_artifact(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_invalid(std::string("fit artifact is not valid JSON: ") + e.what());
  }
  try {
    FitArtifact a;
    a.schema_version = j.at("schema_version").get<int>();
    if (a.schema_version != kArtifactSchemaVersion) {
      throw_invalid("fit artifact schema version " + std::to_string(a.schema_version) + " is not supported (expected " +
                    std::to_string(kArtifactSchemaVersion) + ")");
    }
    const json& f = j.at("family");
    const std::string base = f.at("null_base").get<std::string>();
    const NullParams fixed{base == "chisq" ? NullBase::ChiSq : NullBase::Normal, f.at("fixed_first").get<double>(),
                           f.at("fixed_second").get<double>()};
    const std::string selector = f.at("selector").get<std::string>();
    std::map<std::string, double> values;
    if (fixed.base == NullBase::Normal) {
      values = {{"mean", fixed.first}, {"var", fixed.second}};
    } else {
      values = {{"scale", fixed.first}, {"df", fixed.second}};
    }
    a.family = FamilySpec::parse(selector, values);
    a.family.fixed = fixed;
    a.family.validate();

    const json& h = j.at("histogram");
    a.histogram.origin = h.at("origin").get<double>();
    a.histogram.bin_width = h.at("bin_width").get<double>();
    a.histogram.num_bins = h.at("num_bins").get<int>();
    a.histogram.validate();
    a.counts = h.at("counts").get<std::vector<std::uint64_t>>();
    a.total = h.at("total").get<std::uint64_t>();
    a.out_of_range = h.at("out_of_range").get<std::uint64_t>();

    const json& s = j.at("fit_interval");
    a.interval_lo = s.at("lo").get<double>();
    a.interval_hi = s.at("hi").get<double>();
    a.mask_first = s.at("first_bin").get<int>();
    a.mask_last = s.at("last_bin").get<int>();

    const json& p = j.at("parameters");
    a.parameter_names = p.at("names").get<std::vector<std::string>>();
    a.eta_plus = json_vec(p.at("eta_plus"));
    a.theta_plus = json_vec(p.at("theta_plus"));
    if (a.eta_plus.size() != a.family.dim() + 1 || a.theta_plus.size() != a.family.dim() + 1) {
      throw_invalid("fit artifact parameter count does not match the family");
    }
    a.fitted = json_vec(j.at("fitted_counts"));
    a.overdispersion = j.at("overdispersion").get<double>();
    const json& c = j.at("convergence");
    a.convergence = {c.at("iterations").get<int>(), c.at("score_norm").get<double>(), c.at("deviance").get<double>()};
    const json& cv = j.at("curvature");
    a.curvature.unbounded = cv.at("unbounded").get<bool>();
    a.curvature.argmax = cv.at("argmax").get<int>();
    a.curvature.max_over_bins = cv.at("max_over_bins").is_null() ? std::numeric_limits<double>::infinity()
                                                                  : cv.at("max_over_bins").get<double>();
    a.curvature.at_mode = cv.at("at_mode").is_null() ? std::numeric_limits<double>::infinity()
                                                      : cv.at("at_mode").get<double>();
    for (const json& e : j.at("covariances")) {
      ParameterCovariance pc;
      pc.source = e.at("source").get<std::string>();
      pc.replicates = e.at("replicates").get<int>();
      pc.failures = e.at("failures").get<int>();
      pc.cov_eta_plus = json_mat(e.at("cov_eta_plus"));
      pc.cov_theta_plus = json_mat(e.at("cov_theta_plus"));
      a.covariances.push_back(std::move(pc));
    }
    const json& pv = j.at("provenance");
    a.provenance.input_digest = pv.at("input_digest").get<std::string>();
    a.provenance.input_count = pv.at("input_count").get<std::uint64_t>();
    a.provenance.seed = pv.at("seed").get<std::uint64_t>();
    a.provenance.tool_version = pv.at("tool_version").get<std::string>();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw_invalid(std::string("fit artifact is malformed: ") + e.what());
  }
}

}  // namespace modematch
