#include "modematch/expfam.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "modematch/error.hpp"

namespace modematch {

namespace {

using special::digamma;
using special::log_gamma;

const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void require_dim(const FamilySpec& spec, const Eigen::VectorXd& v, const char* what) {
  if (v.size() != spec.dim()) {
    std::ostringstream os;
    os << what << ": expected " << spec.dim() << " parameters for family " << spec.selector()
       << ", got " << v.size();
    throw_invalid(os.str());
  }
}

void require_support(const FamilySpec& spec, double t) {
  if (!spec.in_support(t)) {
    throw_invalid("t = " + std::to_string(t) + " is outside the support of family " +
                  spec.selector());
  }
}

double fixed_value(const std::map<std::string, double>& values, const std::string& key,
                   double fallback, bool required, std::string_view selector) {
  auto it = values.find(key);
  if (it != values.end()) return it->second;
  if (required) {
    throw_invalid("family " + std::string(selector) + " requires a fixed value for '" + key + "'");
  }
  return fallback;
}

}  // namespace

void NullParams::validate() const {
  const bool ok = base == NullBase::Normal
                      ? std::isfinite(first) && second > 0.0 && std::isfinite(second)
                      : first > 0.0 && second > 0.0 && std::isfinite(first) && std::isfinite(second);
  if (!ok) throw_invalid("null parameters out of range");
}

double NullParams::log_density(double t) const {
  if (base == NullBase::Normal) {
    const double z = t - first;
    return -0.5 * z * z / second - 0.5 * std::log(second) - kLogSqrt2Pi;
  }
  if (!(t > 0.0)) return -std::numeric_limits<double>::infinity();
  const double a = first;
  const double nu = second;
  return -0.5 * nu * std::log(2.0 * a) - log_gamma(0.5 * nu) - t / (2.0 * a) +
         (0.5 * nu - 1.0) * std::log(t);
}

double NullParams::density(double t) const {
  if (base == NullBase::ChiSq && !(t > 0.0)) {
    // Density at the boundary: finite only for nu >= 2.
    if (t == 0.0 && second == 2.0) return 1.0 / (2.0 * first);
    return t == 0.0 && second < 2.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return std::exp(log_density(t));
}

double NullParams::second_derivative(double t) const {
  if (base == NullBase::Normal) {
    const double z = (t - first) / std::sqrt(second);
    return density(t) * (z * z - 1.0) / second;
  }
  if (!(t > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  // d/dt log f = (nu/2 - 1)/t - 1/(2a); f'' = f [(dlog)^2 + dlog'].
  const double k = 0.5 * second - 1.0;
  const double slope = k / t - 1.0 / (2.0 * first);
  const double curvature = -k / (t * t);
  return density(t) * (slope * slope + curvature);
}

double NullParams::mode() const {
  if (base == NullBase::Normal) return first;
  return second > 2.0 ? first * (second - 2.0) : 0.0;
}

FamilySpec FamilySpec::normal() { return {FamilyKind::NormalFull, NullParams::normal(0.0, 1.0)}; }

FamilySpec FamilySpec::normal_mean_only(double variance) {
  FamilySpec s{FamilyKind::NormalMeanOnly, NullParams::normal(0.0, variance)};
  s.validate();
  return s;
}

FamilySpec FamilySpec::normal_var_only(double mean) {
  FamilySpec s{FamilyKind::NormalVarOnly, NullParams::normal(mean, 1.0)};
  s.validate();
  return s;
}

FamilySpec FamilySpec::chisq() { return {FamilyKind::ChiSqFull, NullParams::chisq(1.0, 1.0)}; }

FamilySpec FamilySpec::chisq_scale_only(double df) {
  FamilySpec s{FamilyKind::ChiSqScaleOnly, NullParams::chisq(1.0, df)};
  s.validate();
  return s;
}

FamilySpec FamilySpec::chisq_df_only(double scale) {
  FamilySpec s{FamilyKind::ChiSqDfOnly, NullParams::chisq(scale, 1.0)};
  s.validate();
  return s;
}

FamilySpec FamilySpec::intercept_only(const NullParams& null) {
  FamilySpec s{FamilyKind::InterceptOnly, null};
  s.validate();
  return s;
}

FamilySpec FamilySpec::parse(std::string_view selector,
                             const std::map<std::string, double>& fixed_values) {
  for (const auto& [key, value] : fixed_values) {
    if (key != "mean" && key != "var" && key != "scale" && key != "df") {
      throw_invalid("unknown fixed parameter '" + key + "' (expected mean, var, scale or df)");
    }
    (void)value;
  }
  if (selector == "normal") return normal();
  if (selector == "normal:mean") {
    return normal_mean_only(fixed_value(fixed_values, "var", 1.0, false, selector));
  }
  if (selector == "normal:var") {
    return normal_var_only(fixed_value(fixed_values, "mean", 0.0, false, selector));
  }
  if (selector == "chisq") return chisq();
  if (selector == "chisq:scale") {
    return chisq_scale_only(fixed_value(fixed_values, "df", 0.0, true, selector));
  }
  if (selector == "chisq:df") {
    return chisq_df_only(fixed_value(fixed_values, "scale", 1.0, false, selector));
  }
  if (selector == "p0only") {
    const bool chisq_null = fixed_values.count("df") || fixed_values.count("scale");
    if (chisq_null) {
      return intercept_only(NullParams::chisq(fixed_value(fixed_values, "scale", 1.0, false, selector),
                                              fixed_value(fixed_values, "df", 0.0, true, selector)));
    }
    return intercept_only(NullParams::normal(fixed_value(fixed_values, "mean", 0.0, false, selector),
                                             fixed_value(fixed_values, "var", 1.0, false, selector)));
  }
  throw_invalid("unknown family '" + std::string(selector) +
                "' (expected normal, normal:mean, normal:var, chisq, chisq:scale, chisq:df, p0only)");
}

int FamilySpec::dim() const {
  switch (kind) {
    case FamilyKind::NormalFull:
    case FamilyKind::ChiSqFull: return 2;
    case FamilyKind::NormalMeanOnly:
    case FamilyKind::NormalVarOnly:
    case FamilyKind::ChiSqScaleOnly:
    case FamilyKind::ChiSqDfOnly: return 1;
    case FamilyKind::InterceptOnly: return 0;
  }
  return 0;
}

std::string FamilySpec::selector() const {
  switch (kind) {
    case FamilyKind::NormalFull: return "normal";
    case FamilyKind::NormalMeanOnly: return "normal:mean";
    case FamilyKind::NormalVarOnly: return "normal:var";
    case FamilyKind::ChiSqFull: return "chisq";
    case FamilyKind::ChiSqScaleOnly: return "chisq:scale";
    case FamilyKind::ChiSqDfOnly: return "chisq:df";
    case FamilyKind::InterceptOnly: return "p0only";
  }
  return "";
}

std::vector<std::string> FamilySpec::theta_names() const {
  switch (kind) {
    case FamilyKind::NormalFull: return {"mean", "var"};
    case FamilyKind::NormalMeanOnly: return {"mean"};
    case FamilyKind::NormalVarOnly: return {"var"};
    case FamilyKind::ChiSqFull: return {"scale", "df"};
    case FamilyKind::ChiSqScaleOnly: return {"scale"};
    case FamilyKind::ChiSqDfOnly: return {"df"};
    case FamilyKind::InterceptOnly: return {};
  }
  return {};
}

void FamilySpec::validate() const {
  const bool normal_kind = kind == FamilyKind::NormalFull || kind == FamilyKind::NormalMeanOnly ||
                           kind == FamilyKind::NormalVarOnly;
  const bool chisq_kind = kind == FamilyKind::ChiSqFull || kind == FamilyKind::ChiSqScaleOnly ||
                          kind == FamilyKind::ChiSqDfOnly;
  if ((normal_kind && fixed.base != NullBase::Normal) || (chisq_kind && fixed.base != NullBase::ChiSq)) {
    throw_invalid("family kind and null base disagree");
  }
  fixed.validate();
}

Eigen::VectorXd UsualParams::augmented() const {
  Eigen::VectorXd out(theta.size() + 1);
  out(0) = log_p0;
  out.tail(theta.size()) = theta;
  return out;
}

Eigen::VectorXd CanonicalParams::augmented() const {
  Eigen::VectorXd out(eta.size() + 1);
  out(0) = intercept;
  out.tail(eta.size()) = eta;
  return out;
}

CanonicalParams CanonicalParams::from_augmented(const Eigen::VectorXd& eta_plus) {
  if (eta_plus.size() < 1) throw_invalid("augmented canonical vector is empty");
  return {eta_plus(0), eta_plus.tail(eta_plus.size() - 1)};
}

Eigen::VectorXd sufficient_vector(const FamilySpec& spec, double t) {
  require_support(spec, t);
  switch (spec.kind) {
    case FamilyKind::NormalFull: return Eigen::Vector2d(t, t * t);
    case FamilyKind::NormalMeanOnly: return Eigen::VectorXd::Constant(1, t);
    case FamilyKind::NormalVarOnly: {
      const double d = t - spec.fixed.first;
      return Eigen::VectorXd::Constant(1, d * d);
    }
    case FamilyKind::ChiSqFull: return Eigen::Vector2d(t, std::log(t));
    case FamilyKind::ChiSqScaleOnly: return Eigen::VectorXd::Constant(1, t);
    case FamilyKind::ChiSqDfOnly: return Eigen::VectorXd::Constant(1, std::log(t));
    case FamilyKind::InterceptOnly: return Eigen::VectorXd(0);
  }
  return Eigen::VectorXd(0);
}

double log_carrier(const FamilySpec& spec, double t) {
  require_support(spec, t);
  switch (spec.kind) {
    case FamilyKind::NormalFull:
    case FamilyKind::NormalVarOnly: return -kLogSqrt2Pi;
    case FamilyKind::NormalMeanOnly: {
      const double var0 = spec.fixed.second;
      return -0.5 * t * t / var0 - 0.5 * std::log(var0) - kLogSqrt2Pi;
    }
    case FamilyKind::ChiSqFull: return 0.0;
    case FamilyKind::ChiSqScaleOnly: {
      const double nu0 = spec.fixed.second;
      return (0.5 * nu0 - 1.0) * std::log(t) - log_gamma(0.5 * nu0);
    }
    case FamilyKind::ChiSqDfOnly: return -t / (2.0 * spec.fixed.first);
    case FamilyKind::InterceptOnly: return spec.fixed.log_density(t);
  }
  return 0.0;
}

double fixed_log_term(const FamilySpec&, double) { return 0.0; }

double cumulant(const FamilySpec& spec, const Eigen::VectorXd& eta) {
  require_dim(spec, eta, "cumulant");
  switch (spec.kind) {
    case FamilyKind::NormalFull: {
      if (!(eta(1) < 0.0)) throw_invalid("normal family requires eta2 < 0");
      return -eta(0) * eta(0) / (4.0 * eta(1)) - 0.5 * std::log(-2.0 * eta(1));
    }
    case FamilyKind::NormalMeanOnly: return 0.5 * spec.fixed.second * eta(0) * eta(0);
    case FamilyKind::NormalVarOnly: {
      if (!(eta(0) < 0.0)) throw_invalid("normal variance subfamily requires eta < 0");
      return -0.5 * std::log(-2.0 * eta(0));
    }
    case FamilyKind::ChiSqFull: {
      if (!(eta(0) < 0.0)) throw_invalid("chi-square family requires eta1 < 0");
      if (!(eta(1) > -1.0)) throw_invalid("chi-square family requires eta2 > -1 (df > 0)");
      return log_gamma(eta(1) + 1.0) - (eta(1) + 1.0) * std::log(-eta(0));
    }
    case FamilyKind::ChiSqScaleOnly: {
      if (!(eta(0) < 0.0)) throw_invalid("chi-square scale subfamily requires eta < 0");
      return -0.5 * spec.fixed.second * std::log(-eta(0));
    }
    case FamilyKind::ChiSqDfOnly: {
      if (!(eta(0) > -1.0)) throw_invalid("chi-square df subfamily requires eta > -1 (df > 0)");
      return log_gamma(eta(0) + 1.0) + (eta(0) + 1.0) * std::log(2.0 * spec.fixed.first);
    }
    case FamilyKind::InterceptOnly: return 0.0;
  }
  return 0.0;
}

UsualParams theta_from_eta(const FamilySpec& spec, const CanonicalParams& canonical) {
  const Eigen::VectorXd& eta = canonical.eta;
  const double psi = cumulant(spec, eta);
  UsualParams out;
  out.log_p0 = canonical.intercept + psi;
  out.theta.resize(spec.dim());
  switch (spec.kind) {
    case FamilyKind::NormalFull:
      out.theta << -eta(0) / (2.0 * eta(1)), -1.0 / (2.0 * eta(1));
      break;
    case FamilyKind::NormalMeanOnly: out.theta << spec.fixed.second * eta(0); break;
    case FamilyKind::NormalVarOnly: out.theta << -1.0 / (2.0 * eta(0)); break;
    case FamilyKind::ChiSqFull: out.theta << -1.0 / (2.0 * eta(0)), 2.0 * (eta(1) + 1.0); break;
    case FamilyKind::ChiSqScaleOnly: out.theta << -1.0 / (2.0 * eta(0)); break;
    case FamilyKind::ChiSqDfOnly: out.theta << 2.0 * (eta(0) + 1.0); break;
    case FamilyKind::InterceptOnly: break;
  }
  return out;
}

CanonicalParams eta_from_theta(const FamilySpec& spec, const UsualParams& usual) {
  require_dim(spec, usual.theta, "eta_from_theta");
  const Eigen::VectorXd& th = usual.theta;
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw_invalid(std::string(name) + " must be positive");
  };
  CanonicalParams out;
  out.eta.resize(spec.dim());
  switch (spec.kind) {
    case FamilyKind::NormalFull:
      positive(th(1), "variance");
      out.eta << th(0) / th(1), -1.0 / (2.0 * th(1));
      break;
    case FamilyKind::NormalMeanOnly: out.eta << th(0) / spec.fixed.second; break;
    case FamilyKind::NormalVarOnly:
      positive(th(0), "variance");
      out.eta << -1.0 / (2.0 * th(0));
      break;
    case FamilyKind::ChiSqFull:
      positive(th(0), "scale");
      positive(th(1), "df");
      out.eta << -1.0 / (2.0 * th(0)), 0.5 * th(1) - 1.0;
      break;
    case FamilyKind::ChiSqScaleOnly:
      positive(th(0), "scale");
      out.eta << -1.0 / (2.0 * th(0));
      break;
    case FamilyKind::ChiSqDfOnly:
      positive(th(0), "df");
      out.eta << 0.5 * th(0) - 1.0;
      break;
    case FamilyKind::InterceptOnly: break;
  }
  out.intercept = usual.log_p0 - cumulant(spec, out.eta);
  return out;
}

Eigen::MatrixXd jacobian_D(const FamilySpec& spec, const CanonicalParams& canonical) {
  const UsualParams u = theta_from_eta(spec, canonical);
  const int p = spec.dim() + 1;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(p, p);
  D(0, 0) = 1.0;
  const Eigen::VectorXd& th = u.theta;
  switch (spec.kind) {
    case FamilyKind::NormalFull: {
      const double mu = th(0);
      const double s2 = th(1);
      D(0, 1) = mu;
      D(0, 2) = mu * mu + s2;
      D(1, 1) = s2;
      D(1, 2) = 2.0 * mu * s2;
      D(2, 2) = 2.0 * s2 * s2;
      break;
    }
    case FamilyKind::NormalMeanOnly:
      D(0, 1) = th(0);
      D(1, 1) = spec.fixed.second;
      break;
    case FamilyKind::NormalVarOnly:
      D(0, 1) = th(0);
      D(1, 1) = 2.0 * th(0) * th(0);
      break;
    case FamilyKind::ChiSqFull: {
      const double a = th(0);
      const double nu = th(1);
      D(0, 1) = a * nu;
      D(0, 2) = digamma(0.5 * nu) + std::log(2.0 * a);
      D(1, 1) = 2.0 * a * a;
      D(2, 2) = 2.0;
      break;
    }
    case FamilyKind::ChiSqScaleOnly:
      D(0, 1) = th(0) * spec.fixed.second;
      D(1, 1) = 2.0 * th(0) * th(0);
      break;
    case FamilyKind::ChiSqDfOnly:
      D(0, 1) = digamma(0.5 * th(0)) + std::log(2.0 * spec.fixed.first);
      D(1, 1) = 2.0;
      break;
    case FamilyKind::InterceptOnly: break;
  }
  return D;
}

NullParams null_params(const FamilySpec& spec, const Eigen::VectorXd& theta) {
  require_dim(spec, theta, "null_params");
  NullParams out = spec.fixed;
  switch (spec.kind) {
    case FamilyKind::NormalFull:
    case FamilyKind::ChiSqFull:
      out.first = theta(0);
      out.second = theta(1);
      break;
    case FamilyKind::NormalMeanOnly:
    case FamilyKind::ChiSqScaleOnly: out.first = theta(0); break;
    case FamilyKind::NormalVarOnly:
    case FamilyKind::ChiSqDfOnly: out.second = theta(0); break;
    case FamilyKind::InterceptOnly: break;
  }
  out.validate();
  return out;
}

double density(const FamilySpec& spec, const Eigen::VectorXd& theta, double t) {
  if (!spec.in_support(t)) return 0.0;
  const CanonicalParams c = eta_from_theta(spec, UsualParams{0.0, theta});
  const Eigen::VectorXd x = sufficient_vector(spec, t);
  return std::exp(log_carrier(spec, t) + x.dot(c.eta) - cumulant(spec, c.eta));
}

std::vector<double> quantile_transform(const special::Distribution& input,
                                       std::span<const double> statistics) {
  using special::Distribution;
  input.validate();
  Distribution target;
  if (input.kind == Distribution::Kind::StudentT) {
    target = Distribution::normal(0.0, 1.0);
  } else if (input.kind == Distribution::Kind::FisherF) {
    target = Distribution::chisq(input.first);
  } else {
    throw_invalid("quantile_transform: input must be a t or F distribution");
  }

  std::vector<double> out;
  out.reserve(statistics.size());
  for (std::size_t i = 0; i < statistics.size(); ++i) {
    const double x = statistics[i];
    if (!std::isfinite(x)) {
      throw_data("quantile_transform: statistic " + std::to_string(i) + " is not finite");
    }
    // Work in whichever tail keeps the probability away from 1.
    const double lower = special::cdf(input, x);
    if (lower <= 0.0) {
      throw_numerical("quantile_transform: statistic " + std::to_string(i) +
                      " has zero lower-tail probability");
    }
    if (lower <= 0.5) {
      out.push_back(special::quantile(target, lower));
      continue;
    }
    const double upper = special::sf(input, x);
    if (upper <= 0.0) {
      throw_numerical("quantile_transform: statistic " + std::to_string(i) +
                      " has zero upper-tail probability");
    }
    out.push_back(special::upper_quantile(target, upper));
  }
  return out;
}

}  // namespace modematch
