#include <cmath>
#include <random>
#include <vector>

#include "modematch/error.hpp"
#include "modematch/nullfit.hpp"
#include "modematch/sim.hpp"
#include "support.hpp"

using namespace modematch;

namespace {

// Expected counts N Delta p0 f0(t_k) for a fully specified null.
Eigen::VectorXd exact_counts(const HistogramSpec& spec, double N, double p0, const NullParams& null, bool round) {
  Eigen::VectorXd y(spec.num_bins);
  for (int k = 0; k < spec.num_bins; ++k) {
    const double t = spec.center(k);
    const double v = null.in_support(t) ? N * spec.bin_width * p0 * null.density(t) : 0.0;
    y(k) = round ? std::round(v) : v;
  }
  return y;
}

double score_inf(const NullFit& f) {
  return (f.design.X.transpose() * f.design.weights.cwiseProduct(f.counts - f.fitted)).cwiseAbs().maxCoeff();
}

double score_scale(const NullFit& f) {
  return std::max(1.0, (f.design.X.transpose() * f.design.weights.cwiseProduct(f.counts)).cwiseAbs().maxCoeff());
}

}  // namespace

TEST_SUITE("nullfit") {

TEST_CASE("build_design examples") {
  const HistogramSpec spec{-1.5, 1.0, 3};
  const DesignMatrix dm = build_design(spec, 100.0, FamilySpec::normal(), mask_from_range(spec, 0, 2));
  Eigen::Matrix3d expect;
  expect << 1, -1, 1, 1, 0, 0, 1, 1, 1;
  CHECK((dm.X - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(dm.offset(1) == doctest::Approx(std::log(100.0) - 0.5 * std::log(2 * std::numbers::pi)));

  const HistogramSpec cs{0.5, 1.0, 3};
  const DesignMatrix dc = build_design(cs, 10.0, FamilySpec::chisq(), mask_from_range(cs, 0, 2));
  CHECK(dc.X(0, 0) == 1.0);
  CHECK(dc.X(0, 1) == 1.0);
  CHECK(dc.X(0, 2) == 0.0);
  CHECK(dc.offset(0) == doctest::Approx(std::log(10.0)));

  const DesignMatrix ds = build_design(cs, 10.0, FamilySpec::chisq_scale_only(4.0), mask_from_range(cs, 0, 2));
  for (int k = 0; k < 3; ++k) {
    const double t = cs.center(k);
    CHECK(ds.offset(k) == doctest::Approx(std::log(10.0) + std::log(t) - special::log_gamma(2.0)));
  }
}

TEST_CASE("build_design forces unsupported bins out and rejects them inside the mask") {
  const HistogramSpec spec{-0.3, 0.2, 10};
  const DesignMatrix dm = build_design(spec, 50.0, FamilySpec::chisq(), make_fit_mask(spec, 0.1, 1.7));
  CHECK_FALSE(dm.supported[0]);
  CHECK(dm.weights(0) == 0.0);
  CHECK(dm.mean(Eigen::Vector3d(0.0, -0.5, 0.0))(0) == 0.0);
  CHECK_THROWS_AS(build_design(spec, 50.0, FamilySpec::chisq(), mask_from_range(spec, 0, 5)), Error);
  for (int k = 0; k < spec.num_bins; ++k) CHECK(dm.X(k, 0) == (dm.supported[k] ? 1.0 : 0.0));
}

TEST_CASE("exact-model counts recover the null within O(Delta^2)") {
  const NullParams truth = NullParams::normal(0.2, 1.44);
  for (double delta : {0.2, 0.1, 0.05}) {
    const int K = static_cast<int>(std::round(16.0 / delta));
    const HistogramSpec spec{0.2 - 8.0 - 0.5 * delta, delta, K};
    const double N = 1e6;
    const Eigen::VectorXd y = exact_counts(spec, N, 1.0, truth, true);
    const NullFit f = fit_null(build_design(spec, N, FamilySpec::normal(), make_fit_mask(spec, -1.8, 2.2)), y);
    const double tol = 0.5 * delta * delta + 5e-3;  // rounding of the counts adds O(1/sqrt(N Delta)) noise
    CHECK(std::abs(f.usual.theta(0) - 0.2) < tol);
    CHECK(std::abs(f.usual.theta(1) - 1.44) < tol);
    CHECK(std::abs(f.usual.log_p0) < tol);
  }
}

TEST_CASE("intercept-only fit recovers the proportionality constant exactly") {
  const NullParams null = NullParams::chisq(0.8, 3.0);
  const HistogramSpec spec{0.0, 0.1, 200};
  const FamilySpec fam = FamilySpec::intercept_only(null);
  for (double c : {1.0, 0.93, 0.5}) {
    const Eigen::VectorXd y = exact_counts(spec, 1e4, c, null, false);
    const NullFit f = fit_null(build_design(spec, 1e4, fam, make_fit_mask(spec, 0.0, 8.0)), y);
    CHECK(f.usual.log_p0 == doctest::Approx(std::log(c)).epsilon(1e-12));
    CHECK(f.p0() == doctest::Approx(c).epsilon(1e-12));
  }
}

TEST_CASE("saturated exact histogram is reproduced") {
  const NullParams null = NullParams::normal(-0.4, 2.0);
  const HistogramSpec spec{-6.0, 0.25, 44};
  // Counts proportional to the exponential-family form at the centres fit exactly.
  const Eigen::VectorXd y = exact_counts(spec, 5e4, 0.9, null, false);
  const NullFit f = fit_null(build_design(spec, 5e4, FamilySpec::normal(), mask_from_range(spec, 0, 43)), y);
  CHECK(((f.fitted - y).cwiseAbs().array() <= 1e-8 * y.array().max(1e-300)).all());
  CHECK(f.usual.theta(0) == doctest::Approx(-0.4).epsilon(1e-10));
  CHECK(f.usual.theta(1) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(f.p0() == doctest::Approx(0.9).epsilon(1e-10));
}

TEST_CASE("score equation, intercept identity, scale invariance and fixed point on random data") {
  auto g = testing::rng(41);
  for (int rep = 0; rep < 12; ++rep) {
    const bool chisq = rep % 2 == 1;
    const MixtureScenario sc = chisq ? chisq_scenario(0.9) : normal_scenario(0.9);
    const std::vector<double> x = generate(sc, 5000 + 500 * rep, g);
    const ResolvedGeometry geo = scenario_geometry(sc, 0.1 + 0.02 * (rep % 4), chisq ? 4.0 : 1.0);
    const Histogram h = build_histogram(x, geo.spec);
    const NullFit f = fit_null(build_design(h, sc.family, geo.mask), h.count_vector());

    CHECK(score_inf(f) < 1e-8 * score_scale(f));
    double ys = 0.0, fs = 0.0;
    for (int k = geo.mask.first; k <= geo.mask.last; ++k) {
      ys += f.counts(k);
      fs += f.fitted(k);
    }
    CHECK(fs == doctest::Approx(ys).epsilon(1e-9));
    CHECK(f.alternative.isApprox(f.counts - f.fitted));
    CHECK(f.convergence.iterations <= 50);

    // Multiply counts and N by c.
    const double c = 3.0;
    const NullFit fc = fit_null(build_design(geo.spec, c * h.total, sc.family, geo.mask), c * h.count_vector());
    CHECK(std::abs(fc.usual.log_p0 - f.usual.log_p0) < 1e-9);
    CHECK((fc.usual.theta - f.usual.theta).cwiseAbs().maxCoeff() < 1e-9);

    // Refit on yhat restricted to S0.
    Eigen::VectorXd yhat = f.fitted.cwiseProduct(geo.mask.weights);
    const NullFit again = fit_null(f.design, yhat);
    CHECK((again.canonical.augmented() - f.canonical.augmented()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("overdispersion") {
  const NullParams null = NullParams::normal(0.0, 1.0);
  const HistogramSpec spec{-5.05, 0.1, 101};
  const Eigen::VectorXd y = exact_counts(spec, 1e5, 1.0, null, false);
  const NullFit exact = fit_null(build_design(spec, 1e5, FamilySpec::normal(), make_fit_mask(spec, -1.5, 1.5)), y);
  CHECK(std::abs(overdispersion(exact)) < 1e-12);

  // Independent draws sit near the Poisson baseline of 1.
  auto g = testing::rng(42);
  std::normal_distribution<double> nd;
  double mean = 0.0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> x(10000);
    for (double& v : x) v = nd(g);
    const Histogram h = build_histogram(x, spec);
    mean += fit_null(build_design(h, FamilySpec::normal(), make_fit_mask(spec, -1.5, 1.5)), h.count_vector())
                .overdispersion /
            reps;
  }
  CHECK(mean == doctest::Approx(1.0).epsilon(0.1));

  // Clustered statistics: blocks of 50 sharing most of their variance.
  std::vector<double> x;
  for (int b = 0; b < 200; ++b) {
    const double shared = nd(g);
    for (int i = 0; i < 50; ++i) x.push_back(std::sqrt(0.99) * shared + std::sqrt(0.01) * nd(g));
  }
  const Histogram h = build_histogram(x, spec);
  const NullFit clustered = fit_null(build_design(h, FamilySpec::normal(), make_fit_mask(spec, -1.5, 1.5)), h.count_vector());
  CHECK(clustered.overdispersion > 2.0);
}

TEST_CASE("predict_density") {
  const NullParams null = NullParams::normal(0.0, 1.0);
  const HistogramSpec spec{-5.05, 0.1, 101};
  const Eigen::VectorXd y = exact_counts(spec, 1e5, 1.0, null, false);
  const NullFit f = fit_null(build_design(spec, 1e5, FamilySpec::normal(), make_fit_mask(spec, -1.5, 1.5)), y);
  const std::vector<double> t = {-1.0, 0.0, 2.5};
  const DensityPrediction p = predict_density(f, t);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(p.null_density[i] == doctest::Approx(null.density(t[i])).epsilon(1e-8));
  CHECK(p.alternative_density.cwiseAbs().maxCoeff() < 1e-8);

  // Chi-square mixture: the alternative sits to the right of the null bulk.
  const MixtureScenario sc = chisq_scenario(0.9);
  const std::vector<double> x = generate(sc, 20000, 43);
  const ResolvedGeometry geo = scenario_geometry(sc, 0.1, 4.0);
  const Histogram h = build_histogram(x, geo.spec);
  const NullFit fc = fit_null(build_design(h, sc.family, geo.mask), h.count_vector());
  const double q90 = special::quantile(special::Distribution::scaled_chisq(0.8, 3.0), 0.9);
  double above = 0.0, below = 0.0;
  for (int k = 0; k < geo.spec.num_bins; ++k) (geo.spec.center(k) > q90 ? above : below) += fc.alternative(k);
  CHECK(above > 0.0);
  CHECK(above > std::abs(below));
  // Sum of the alternative counts is N(1 - p0hat) up to the out-of-range mass
  // and the Riemann error of the fitted null.
  CHECK(fc.alternative.sum() == doctest::Approx(h.count_vector().sum() - fc.fitted.sum()).epsilon(1e-12));
  CHECK(std::abs(fc.alternative.sum() - h.total * (1.0 - fc.p0())) < 0.005 * h.total);
}

TEST_CASE("fit errors") {
  const HistogramSpec spec{-2.05, 0.1, 41};
  const FitMask narrow = make_fit_mask(spec, -0.05, 0.05);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(41, 10.0);
  CHECK_THROWS_AS(fit_null(build_design(spec, 410, FamilySpec::normal(), narrow), y), Error);
  Eigen::VectorXd zeros = Eigen::VectorXd::Zero(41);
  CHECK_THROWS_AS(fit_null(build_design(spec, 410, FamilySpec::normal(), make_fit_mask(spec, -1, 1)), zeros), Error);
  // Counts rising away from the centre give a convex log-histogram: no normal fits it.
  Eigen::VectorXd convex(41);
  for (int k = 0; k < 41; ++k) convex(k) = 10.0 + 5.0 * std::pow(spec.center(k), 2) * 20;
  try {
    fit_null(build_design(spec, convex.sum(), FamilySpec::normal(), make_fit_mask(spec, -1, 1)), convex);
    FAIL("expected a fit failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
  }
  CHECK_THROWS_AS(fit_null(build_design(spec, 410, FamilySpec::normal(), make_fit_mask(spec, -1, 1)), Eigen::VectorXd::Ones(3)),
                  Error);
}

TEST_CASE("resolve_geometry defaults") {
  const MixtureScenario sc = normal_scenario(0.95);
  const std::vector<double> x = generate(sc, 20000, 44);
  const ResolvedGeometry g = resolve_geometry(x, FitConfig{});
  CHECK(g.spec.bin_width == doctest::Approx(0.12).epsilon(0.15));
  double lo = 1e300, hi = -1e300;
  for (double v : x) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(g.spec.origin <= lo);
  CHECK(g.spec.right_edge() > hi);
  CHECK(g.mask.lo < 0.2);
  CHECK(g.mask.hi > 0.2);

  FitConfig chi;
  chi.family = FamilySpec::chisq();
  const std::vector<double> c = generate(chisq_scenario(0.95), 20000, 45);
  const ResolvedGeometry gc = resolve_geometry(c, chi);
  CHECK(gc.spec.origin == 0.0);
  CHECK(gc.mask.first == 0);

  FitConfig fixed;
  fixed.bin_width = 0.2;
  fixed.origin = -5.0;
  fixed.num_bins = 60;
  fixed.interval = std::make_pair(-1.0, 1.0);
  const ResolvedGeometry gf = resolve_geometry(x, fixed);
  CHECK(gf.spec == HistogramSpec{-5.0, 0.2, 60});
  CHECK(gf.mask.lo == doctest::Approx(-1.0));
  CHECK(gf.mask.hi == doctest::Approx(1.0));
  CHECK_THROWS_AS(resolve_geometry(std::vector<double>{}, FitConfig{}), Error);
}

}  // TEST_SUITE
