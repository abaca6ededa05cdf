#include "modematch/bias.hpp"

#include <cmath>

#include "modematch/error.hpp"
#include "modematch/special_functions.hpp"

namespace modematch {

namespace {

double chisq_density(double t, double df) {
  if (!(t > 0.0)) return 0.0;
  return std::exp((0.5 * df - 1.0) * std::log(t) - 0.5 * t - 0.5 * df * std::log(2.0) -
                  special::log_gamma(0.5 * df));
}

}  // namespace

void AlternativeSpec::validate() const {
  if (kind == Kind::Normal) {
    if (!std::isfinite(first) || !(second > 0.0)) throw_invalid("alternative normal needs variance > 0");
  } else if (!(first > 0.0) || !(second > 0.0) || !(third >= 0.0)) {
    throw_invalid("noncentral chi-square needs scale > 0, df > 0, noncentrality >= 0");
  }
}

double AlternativeSpec::density(double t) const {
  if (kind == Kind::Normal) return NullParams::normal(first, second).density(t);
  if (!(t > 0.0)) return 0.0;
  const double x = t / first;
  const double half = 0.5 * third;
  if (half == 0.0) return chisq_density(x, second) / first;
  // Poisson(delta/2) mixture of central chi-squares, summed outward from the
  // largest weight until the remaining mass is below 1e-12.
  const long centre = static_cast<long>(std::floor(half));
  auto weight = [&](long j) {
    return std::exp(-half + j * std::log(half) - special::log_gamma(j + 1.0));
  };
  double sum = 0.0;
  double mass = 0.0;
  for (long j = centre; j >= 0; --j) {
    const double w = weight(j);
    sum += w * chisq_density(x, second + 2.0 * j);
    mass += w;
    if (w < 1e-16) break;
  }
  for (long j = centre + 1; mass < 1.0 - 1e-12 && j < centre + 100000; ++j) {
    const double w = weight(j);
    sum += w * chisq_density(x, second + 2.0 * j);
    mass += w;
  }
  return sum / first;
}

double AlternativeSpec::mean() const {
  return kind == Kind::Normal ? first : first * (second + third);
}

double AlternativeSpec::sample(std::mt19937_64& rng) const {
  if (kind == Kind::Normal) return std::normal_distribution<double>(first, std::sqrt(second))(rng);
  long j = 0;
  if (third > 0.0) j = std::poisson_distribution<long>(0.5 * third)(rng);
  const double shape = 0.5 * (second + 2.0 * j);
  return first * std::gamma_distribution<double>(shape, 2.0)(rng);
}

void MixtureScenario::validate() const {
  if (!(p0 > 0.0) || !(p0 <= 1.0)) throw_invalid("p0 must lie in (0, 1]");
  family.validate();
  null.validate();
  if (null.base != family.base()) throw_invalid("scenario null and family disagree");
  alternative.validate();
}

double MixtureScenario::mixture_density(double t) const {
  const double f0 = null.in_support(t) ? null.density(t) : 0.0;
  return p0 * f0 + (1.0 - p0) * alternative.density(t);
}

UsualParams MixtureScenario::truth() const {
  UsualParams u;
  u.log_p0 = std::log(p0);
  switch (family.kind) {
    case FamilyKind::NormalFull:
    case FamilyKind::ChiSqFull: u.theta = Eigen::Vector2d(null.first, null.second); break;
    case FamilyKind::NormalMeanOnly:
    case FamilyKind::ChiSqScaleOnly: u.theta = Eigen::VectorXd::Constant(1, null.first); break;
    case FamilyKind::NormalVarOnly:
    case FamilyKind::ChiSqDfOnly: u.theta = Eigen::VectorXd::Constant(1, null.second); break;
    case FamilyKind::InterceptOnly: u.theta = Eigen::VectorXd(0); break;
  }
  return u;
}

MixtureScenario normal_scenario(double p0) {
  MixtureScenario s;
  s.p0 = p0;
  s.family = FamilySpec::normal();
  s.null = NullParams::normal(0.2, 1.44);
  s.alternative = AlternativeSpec::normal(3.0, 1.44);
  s.label = "normal";
  s.validate();
  return s;
}

MixtureScenario chisq_scenario(double p0) {
  MixtureScenario s;
  s.p0 = p0;
  s.family = FamilySpec::chisq();
  s.null = NullParams::chisq(0.8, 3.0);
  s.alternative = AlternativeSpec::noncentral_chisq(3.0, 3.0);
  s.label = "chisq";
  s.validate();
  return s;
}

ResolvedGeometry scenario_geometry(const MixtureScenario& scenario, double delta, double t0) {
  if (!(delta > 0.0)) throw_invalid("bin width must be positive");
  if (!(t0 > 0.0)) throw_invalid("t0 must be positive");
  HistogramSpec spec;
  spec.bin_width = delta;
  double lo, hi;
  if (scenario.null.base == NullBase::Normal) {
    // Anchor edges on the null mean so that mean +- t0 falls on edges when t0 is a multiple of delta.
    const double anchor = scenario.null.first;
    const double sd = std::sqrt(scenario.null.second);
    const double low_reach = std::min(anchor - 8.0 * sd, scenario.alternative.mean() - 8.0 * sd);
    const double high_reach = std::max(anchor + 8.0 * sd, scenario.alternative.mean() + 8.0 * sd);
    const double below = std::ceil((anchor - low_reach) / delta);
    spec.origin = anchor - below * delta;
    spec.num_bins = static_cast<int>(std::ceil((high_reach - spec.origin) / delta));
    lo = anchor - t0;
    hi = anchor + t0;
  } else {
    spec.origin = 0.0;
    const double reach = std::max(scenario.null.first * (scenario.null.second + 12.0 * std::sqrt(2.0 * scenario.null.second)),
                                  scenario.alternative.mean() * 4.0 + 20.0);
    spec.num_bins = static_cast<int>(std::ceil(reach / delta));
    lo = 0.0;
    hi = t0;
  }
  spec.num_bins = std::max(spec.num_bins, 3);
  return {spec, make_fit_mask(spec, lo, hi)};
}

DesignMatrix scenario_design(const MixtureScenario& scenario, const ResolvedGeometry& geometry) {
  scenario.validate();
  return build_design(geometry.spec, 1.0 / geometry.spec.bin_width, scenario.family, geometry.mask);
}

Eigen::VectorXd limiting_fit(const MixtureScenario& scenario, const ResolvedGeometry& geometry) {
  const DesignMatrix dm = scenario_design(scenario, geometry);
  Eigen::VectorXd y(dm.bins());
  for (int k = 0; k < dm.bins(); ++k) {
    y(k) = dm.supported[k] ? scenario.mixture_density(geometry.spec.center(k)) : 0.0;
  }
  SolverOptions options;
  options.max_iterations = 100;
  options.score_tolerance = 1e-12;
  return solve_poisson(dm, y, options).beta;
}

BiasApproximation bias_approximation(const MixtureScenario& scenario, const ResolvedGeometry& geometry,
                                     const Eigen::VectorXd& eta_at) {
  const DesignMatrix dm = scenario_design(scenario, geometry);
  const int K = dm.bins();
  Eigen::VectorXd f0(K), diff(K);
  for (int k = 0; k < K; ++k) {
    const double t = geometry.spec.center(k);
    f0(k) = dm.supported[k] ? scenario.null.density(t) : 0.0;
    diff(k) = dm.supported[k] ? scenario.alternative.density(t) - f0(k) : 0.0;
  }
  const Eigen::MatrixXd XtW = dm.X.transpose() * dm.weights.asDiagonal();
  const Eigen::MatrixXd bread = XtW * f0.asDiagonal() * dm.X;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(bread);
  if (!lu.isInvertible()) throw_numerical("X'W Diag(f0) X is singular");
  BiasApproximation out;
  out.eta_scale = (1.0 - scenario.p0) * lu.solve(XtW * diff);
  out.eta_scale(0) -= std::log(scenario.p0);
  out.theta_scale = jacobian_D(scenario.family, CanonicalParams::from_augmented(eta_at)) * out.eta_scale;
  return out;
}

AsymptoticBias asymptotic_bias(const MixtureScenario& scenario, const ResolvedGeometry& geometry) {
  AsymptoticBias out;
  const UsualParams truth = scenario.truth();
  out.theta_true = truth.augmented();
  out.eta_true = eta_from_theta(scenario.family, truth).augmented();
  out.eta_limit = limiting_fit(scenario, geometry);
  try {
    out.theta_limit = theta_from_eta(scenario.family, CanonicalParams::from_augmented(out.eta_limit)).augmented();
  } catch (const Error& e) {
    throw_numerical(std::string("limiting fit leaves the family domain: ") + e.what());
  }
  out.bias_exact = out.theta_limit - out.theta_true;
  const BiasApproximation approx = bias_approximation(scenario, geometry, out.eta_limit);
  out.bias_approx = approx.theta_scale;
  out.bias_approx_eta = approx.eta_scale;
  return out;
}

}  // namespace modematch
