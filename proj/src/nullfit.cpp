#include "modematch/nullfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "modematch/error.hpp"

namespace modematch {

namespace {

double deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, const Eigen::VectorXd& w) {
  double d = 0.0;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    if (w(k) == 0.0) continue;
    const double term = y(k) > 0.0 ? y(k) * std::log(y(k) / mu(k)) - (y(k) - mu(k)) : mu(k);
    d += w(k) * term;
  }
  return 2.0 * d;
}

double quantile_sorted(const std::vector<double>& v, double p) {
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + frac * (v[i + 1] - v[i]);
}

double round_significant(double x, int digits) {
  if (!(x > 0.0)) return x;
  const double mag = std::pow(10.0, std::floor(std::log10(x)) - (digits - 1));
  return std::round(x / mag) * mag;
}

constexpr int kMaxBins = 100000;

}  // namespace

Eigen::VectorXd DesignMatrix::mean(const Eigen::VectorXd& eta_plus) const {
  Eigen::VectorXd mu(bins());
  const Eigen::VectorXd lin = X * eta_plus + offset;
  for (int k = 0; k < bins(); ++k) mu(k) = supported[k] ? std::exp(lin(k)) : 0.0;
  return mu;
}

DesignMatrix build_design(const HistogramSpec& spec, double total, const FamilySpec& family,
                          const FitMask& mask) {
  spec.validate();
  family.validate();
  if (!(total > 0.0)) throw_invalid("design needs a positive total count");
  if (mask.weights.size() != spec.num_bins) throw_invalid("fit mask does not match the histogram");

  DesignMatrix dm;
  dm.family = family;
  dm.spec = spec;
  dm.mask = mask;
  dm.total = total;
  const int K = spec.num_bins;
  const int p = family.dim() + 1;
  dm.X = Eigen::MatrixXd::Zero(K, p);
  dm.offset = Eigen::VectorXd::Constant(K, -std::numeric_limits<double>::infinity());
  dm.weights = mask.weights;
  dm.supported.assign(K, false);
  const double log_scale = std::log(total * spec.bin_width);
  for (int k = 0; k < K; ++k) {
    const double t = spec.center(k);
    if (!family.in_support(t)) {
      if (mask.weights(k) != 0.0) {
        throw_invalid("fit interval includes bin centre " + std::to_string(t) +
                      " outside the support of family " + family.selector());
      }
      dm.weights(k) = 0.0;
      continue;
    }
    dm.supported[k] = true;
    dm.X(k, 0) = 1.0;
    if (p > 1) dm.X.row(k).tail(p - 1) = sufficient_vector(family, t).transpose();
    dm.offset(k) = log_scale + log_carrier(family, t);
  }
  return dm;
}

PoissonSolution solve_poisson(const DesignMatrix& dm, const Eigen::VectorXd& y,
                              const SolverOptions& options) {
  const int K = dm.bins();
  const int p = dm.params();
  if (y.size() != K) throw_invalid("count vector length does not match the design");

  std::vector<int> rows;
  double min_positive = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    if (dm.weights(k) == 0.0) continue;
    if (!(y(k) >= 0.0) || !std::isfinite(y(k))) throw_data("counts must be finite and nonnegative");
    rows.push_back(k);
    if (y(k) > 0.0) min_positive = std::min(min_positive, y(k));
  }
  const int n = static_cast<int>(rows.size());
  if (n < p) {
    throw_numerical("fit interval has " + std::to_string(n) + " bins but the family needs at least " +
                    std::to_string(p));
  }
  if (!std::isfinite(min_positive)) throw_data("every count inside the fit interval is zero");

  Eigen::MatrixXd Xm(n, p);
  Eigen::VectorXd hm(n), ym(n), wm(n);
  for (int i = 0; i < n; ++i) {
    Xm.row(i) = dm.X.row(rows[i]);
    hm(i) = dm.offset(rows[i]);
    ym(i) = y(rows[i]);
    wm(i) = dm.weights(rows[i]);
  }
  const double score_scale = std::max(1.0, (Xm.transpose() * wm.cwiseProduct(ym)).cwiseAbs().maxCoeff());

  // Warm start: weighted least squares on the log counts.
  const double floor = std::min(0.5, 0.5 * min_positive);
  Eigen::VectorXd beta;
  {
    Eigen::VectorXd yf = ym.cwiseMax(floor);
    Eigen::VectorXd sw = (wm.cwiseProduct(yf)).cwiseSqrt();
    Eigen::VectorXd z = yf.array().log().matrix() - hm;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sw.asDiagonal() * Xm);
    if (qr.rank() < p) throw_numerical("design matrix is rank deficient on the fit interval");
    beta = qr.solve(sw.cwiseProduct(z));
  }

  auto mean_of = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd {
    return (Xm * b + hm).array().exp().matrix();
  };

  Eigen::VectorXd mu = mean_of(beta);
  double dev = deviance(ym, mu, wm);
  if (!std::isfinite(dev)) throw_numerical("starting values give a non-finite deviance");

  PoissonSolution sol;
  for (int it = 1; it <= options.max_iterations; ++it) {
    Eigen::VectorXd sw = (wm.cwiseProduct(mu)).cwiseSqrt();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sw.asDiagonal() * Xm);
    if (qr.rank() < p) throw_numerical("IRLS weight matrix became rank deficient");
    Eigen::VectorXd rhs = (ym - mu).cwiseQuotient(mu).cwiseProduct(sw);
    Eigen::VectorXd step = qr.solve(rhs);

    double scale = 1.0;
    Eigen::VectorXd next = beta + step;
    Eigen::VectorXd next_mu = mean_of(next);
    double next_dev = deviance(ym, next_mu, wm);
    for (int half = 0; half < 40 && !(std::isfinite(next_dev) && next_dev <= dev * (1.0 + 1e-12) + 1e-12);
         ++half) {
      scale *= 0.5;
      next = beta + scale * step;
      next_mu = mean_of(next);
      next_dev = deviance(ym, next_mu, wm);
    }
    if (!std::isfinite(next_dev)) throw_numerical("IRLS produced a non-finite deviance");

    const double change = std::abs(next_dev - dev) / (std::abs(next_dev) + 0.1);
    beta = next;
    mu = next_mu;
    dev = next_dev;
    const double score = (Xm.transpose() * wm.cwiseProduct(ym - mu)).cwiseAbs().maxCoeff();
    sol.iterations = it;
    sol.score_norm = score;
    if (change < options.deviance_tolerance && score < options.score_tolerance * score_scale) {
      sol.beta = beta;
      sol.deviance = dev;
      return sol;
    }
  }
  std::ostringstream os;
  os << "IRLS did not converge in " << options.max_iterations << " iterations (deviance " << dev
     << ", score " << sol.score_norm << ")";
  throw_numerical(os.str());
}

double NullFit::p0() const { return std::exp(usual.log_p0); }

NullFit fit_null(const DesignMatrix& dm, const Eigen::VectorXd& y, const SolverOptions& options) {
  const PoissonSolution sol = solve_poisson(dm, y, options);
  NullFit fit;
  fit.design = dm;
  fit.counts = y;
  fit.canonical = CanonicalParams::from_augmented(sol.beta);
  try {
    fit.usual = theta_from_eta(dm.family, fit.canonical);
    null_params(dm.family, fit.usual.theta);
  } catch (const Error& e) {
    throw_numerical(std::string("fitted parameters leave the family domain: ") + e.what());
  }
  fit.fitted = dm.mean(sol.beta);
  fit.alternative = y - fit.fitted;
  fit.convergence = {sol.iterations, sol.score_norm, sol.deviance};
  fit.overdispersion = overdispersion(fit);
  return fit;
}

double overdispersion(const NullFit& fit) {
  double sum = 0.0;
  int n = 0;
  for (int k = 0; k < fit.design.bins(); ++k) {
    if (fit.design.weights(k) == 0.0) continue;
    const double lam = fit.fitted(k);
    if (!(lam > 0.0)) throw_numerical("fitted count is zero inside the fit interval");
    const double r = fit.counts(k) - lam;
    sum += r * r / lam;
    ++n;
  }
  return n > 0 ? sum / n : 0.0;
}

DensityPrediction predict_density(const NullFit& fit, std::span<const double> t) {
  DensityPrediction out;
  const NullParams null = fit.null();
  const double p0 = fit.p0();
  out.null_density.reserve(t.size());
  for (double x : t) out.null_density.push_back(null.in_support(x) ? p0 * null.density(x) : 0.0);
  out.alternative_density = fit.alternative / (fit.total() * fit.spec().bin_width);
  return out;
}

ResolvedGeometry resolve_geometry(std::span<const double> statistics, const FitConfig& config) {
  if (statistics.empty()) throw_data("no statistics supplied");
  std::vector<double> v(statistics.begin(), statistics.end());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw_data("statistic at index " + std::to_string(i) + " is not finite");
  }
  std::sort(v.begin(), v.end());
  const double median = quantile_sorted(v, 0.5);
  const bool chisq = config.family.base() == NullBase::ChiSq;

  double scale = 1.0;
  if (chisq) {
    // var/(2 mean) recovers a for a*chi2(nu); use the bulk below the 90th percentile.
    const double q90 = quantile_sorted(v, 0.9);
    double s = 0.0, s2 = 0.0;
    int n = 0;
    for (double x : v) {
      if (x > q90) break;
      s += x;
      s2 += x * x;
      ++n;
    }
    if (n > 1) {
      const double m = s / n;
      const double var = (s2 - n * m * m) / (n - 1);
      if (m > 0.0 && var > 0.0) scale = var / (2.0 * m);
    }
  } else {
    const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
    if (iqr > 0.0) scale = iqr / 1.349;
  }

  HistogramSpec spec;
  spec.bin_width = config.bin_width ? *config.bin_width : round_significant(0.1 * scale, 2);
  if (!(spec.bin_width > 0.0) || !std::isfinite(spec.bin_width)) throw_invalid("bin width must be positive");
  if (config.origin) {
    spec.origin = *config.origin;
  } else if (chisq) {
    spec.origin = 0.0;
  } else {
    const double m = std::ceil((median - 0.5 * spec.bin_width - v.front()) / spec.bin_width);
    spec.origin = median - 0.5 * spec.bin_width - std::max(m, 0.0) * spec.bin_width;
  }
  if (config.num_bins) {
    spec.num_bins = *config.num_bins;
  } else {
    const double span = std::floor((v.back() - spec.origin) / spec.bin_width) + 1.0;
    if (span > kMaxBins) {
      throw_invalid("data range needs more than " + std::to_string(kMaxBins) +
                    " bins; set the bin count or a wider bin width");
    }
    spec.num_bins = std::max(3, static_cast<int>(span));
  }
  spec.validate();

  std::pair<double, double> interval;
  if (config.interval) {
    interval = *config.interval;
  } else if (chisq) {
    interval = {0.0, quantile_sorted(v, 0.9)};
  } else {
    interval = {median - 1.5 * scale, median + 1.5 * scale};
  }
  return {spec, make_fit_mask(spec, interval.first, interval.second)};
}

PipelineResult run_pipeline(std::span<const double> statistics, const FamilySpec& family,
                            const ResolvedGeometry& geometry) {
  Histogram h = build_histogram(statistics, geometry.spec);
  DesignMatrix dm = build_design(h, family, geometry.mask);
  NullFit fit = fit_null(dm, h.count_vector());
  return {std::move(h), std::move(fit)};
}

PipelineResult run_pipeline(std::span<const double> statistics, const FitConfig& config) {
  return run_pipeline(statistics, config.family, resolve_geometry(statistics, config));
}

}  // namespace modematch
