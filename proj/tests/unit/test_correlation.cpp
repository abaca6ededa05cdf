#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "modematch/correlation.hpp"
#include "modematch/error.hpp"
#include "support.hpp"

using namespace modematch;

namespace {

double bivariate_normal(double x, double y, double rho) {
  const double d = 1.0 - rho * rho;
  return std::exp(-(x * x - 2 * rho * x * y + y * y) / (2 * d)) / (2 * std::numbers::pi * std::sqrt(d));
}

// Kibble's bivariate gamma with Gamma(alpha + 1) marginals, mapped to a chi2 scale
// through u = t/(2a).
double bivariate_chisq(double ti, double tj, double rho, double a, double nu) {
  const double alpha = 0.5 * nu - 1.0;
  const double x = ti / (2 * a), y = tj / (2 * a);
  const double arg = 2.0 * std::sqrt(rho * x * y) / (1.0 - rho);
  const double log_pre = 0.5 * alpha * std::log(x * y / rho) - (x + y) / (1.0 - rho) -
                         special::log_gamma(alpha + 1.0) - std::log(1.0 - rho);
  return std::exp(log_pre) * boost::math::cyl_bessel_i(alpha, arg) / (4 * a * a);
}

// Replicate histograms of N chi2(2) statistics sharing one normal factor per
// coordinate; pairwise correlation of the statistics is r^2.
std::vector<std::vector<double>> equicorrelated_replicates(const HistogramSpec& spec, int N, int P, double r,
                                                           std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd;
  std::vector<std::vector<double>> rows;
  std::vector<double> x(N);
  for (int p = 0; p < P; ++p) {
    const double w1 = nd(g), w2 = nd(g);
    for (double& v : x) {
      const double z1 = std::sqrt(r) * w1 + std::sqrt(1 - r) * nd(g);
      const double z2 = std::sqrt(r) * w2 + std::sqrt(1 - r) * nd(g);
      v = z1 * z1 + z2 * z2;
    }
    const Histogram h = build_histogram(x, spec);
    rows.emplace_back(h.counts.begin(), h.counts.end());
  }
  return rows;
}

}  // namespace

TEST_SUITE("correlation") {

TEST_CASE("orthonormal polynomials are orthonormal under the null") {
  for (const NullParams& null : {NullParams::normal(0.2, 1.44), NullParams::chisq(0.8, 3.0), NullParams::chisq(1.0, 2.0)}) {
    for (int m = 0; m <= 4; ++m) {
      for (int n = m; n <= 4; ++n) {
        auto f = [&](double t) {
          return orthonormal_polynomial(null, m, t) * orthonormal_polynomial(null, n, t) * null.density(t);
        };
        const double v = null.base == NullBase::Normal ? testing::integrate(f, -15, 15) : testing::integrate_to_inf(f, 0.0);
        CHECK(v == doctest::Approx(m == n ? 1.0 : 0.0).epsilon(1e-8).scale(1.0));
      }
    }
    // Positive leading coefficient: increasing far to the right.
    const double far = null.base == NullBase::Normal ? 20.0 : 200.0;
    for (int n = 1; n <= 4; ++n) CHECK(orthonormal_polynomial(null, n, far) > 0.0);
  }
}

TEST_CASE("lancaster_density: independence, Mehler and Kibble") {
  const NullParams n01 = NullParams::normal(0, 1);
  CHECK(lancaster_density(n01, 0.0, 0.3, -1.2, 20) == doctest::Approx(n01.density(0.3) * n01.density(-1.2)).epsilon(1e-15));
  double worst = 0.0;
  for (double x = -3; x <= 3.0001; x += 0.1) {
    for (double y = -3; y <= 3.0001; y += 0.1) {
      worst = std::max(worst, std::abs(lancaster_density(n01, 0.3, x, y, 20) - bivariate_normal(x, y, 0.3)));
      CHECK(lancaster_density(n01, 0.3, x, y, 20) == doctest::Approx(lancaster_density(n01, 0.3, y, x, 20)));
    }
  }
  CHECK(worst < 1e-6);

  const NullParams c = NullParams::chisq(0.8, 3.0);
  for (double ti : {0.3, 1.0, 2.5, 6.0}) {
    for (double tj : {0.5, 1.7, 4.0}) {
      CHECK(lancaster_density(c, 0.2, ti, tj, 40) == doctest::Approx(bivariate_chisq(ti, tj, 0.2, 0.8, 3.0)).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(lancaster_density(n01, 1.0, 0, 0, 5), Error);
}

TEST_CASE("lancaster marginals and nonnegativity") {
  const NullParams n = NullParams::normal(0.2, 1.44);
  for (double ti : {-1.0, 0.2, 2.0}) {
    const double m = testing::integrate([&](double tj) { return lancaster_density(n, 0.4, ti, tj, 20); }, -15, 15);
    CHECK(m == doctest::Approx(n.density(ti)).epsilon(1e-8));
  }
  const NullParams c = NullParams::chisq(1.0, 4.0);
  const double m = testing::integrate_to_inf([&](double tj) { return lancaster_density(c, 0.3, 2.0, tj, 20); }, 0.0);
  CHECK(m == doctest::Approx(c.density(2.0)).epsilon(1e-8));
  for (double rho : {-0.5, -0.2, 0.2, 0.5}) {
    for (double x = -2.8; x <= 3.2; x += 0.3) {
      for (double y = -2.8; y <= 3.2; y += 0.3) CHECK(lancaster_density(n, rho, x, y, 24) >= 0.0);
    }
  }
}

TEST_CASE("correlated_bin_cov reduces to the multinomial form and to the wing forms") {
  const HistogramSpec spec{-4.0, 0.2, 40};
  const Eigen::VectorXd t = spec.centers();
  const NullParams n01 = NullParams::normal(0, 1);
  const double N = 5000;
  Eigen::VectorXd lam(t.size());
  for (int k = 0; k < t.size(); ++k) lam(k) = N * 0.2 * n01.density(t(k));

  RhoMoments zero;
  zero.moments = {0.0, 0.0, 0.0};
  const CorrelatedCovariance a = correlated_bin_cov(lam, N, n01, t, zero);
  CHECK(a.matrix == multinomial_cov(lam, N).matrix);

  RhoMoments second;
  second.moments = {0.0, 0.004};
  const CorrelatedCovariance b = correlated_bin_cov(lam, N, n01, t, second);
  Eigen::VectorXd w2(t.size());
  for (int k = 0; k < t.size(); ++k) w2(k) = lam(k) * (t(k) * t(k) - 1.0) / std::sqrt(2.0);
  const Eigen::MatrixXd eq31 = multinomial_cov(lam, N).matrix + (1 - 1 / N) * 0.004 * w2 * w2.transpose();
  CHECK((b.matrix - eq31).cwiseAbs().maxCoeff() <= 1e-12 * eq31.cwiseAbs().maxCoeff());
  CHECK((b.matrix - b.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * b.matrix.cwiseAbs().maxCoeff());

  const NullParams c = NullParams::chisq(0.9, 4.3);
  const HistogramSpec cs{0.0, 0.1, 150};
  const Eigen::VectorXd tc = cs.centers();
  Eigen::VectorXd lc(tc.size()), w1(tc.size());
  const double nu = 4.3, ac = 0.9;
  for (int k = 0; k < tc.size(); ++k) {
    lc(k) = N * 0.1 * c.density(tc(k));
    w1(k) = lc(k) * std::sqrt(std::tgamma(nu / 2) / std::tgamma(nu / 2 + 1)) * (tc(k) / (2 * ac) - nu / 2);
  }
  const CorrelatedCovariance d = correlated_bin_cov(lc, N, c, tc, RhoMoments::constant(0.01, 1));
  const Eigen::MatrixXd eq32 = multinomial_cov(lc, N).matrix + (1 - 1 / N) * 0.01 * w1 * w1.transpose();
  CHECK((d.matrix - eq32).cwiseAbs().maxCoeff() <= 1e-12 * eq32.cwiseAbs().maxCoeff());
  CHECK((wing_vector(lc, tc, c, 1) - w1).cwiseAbs().maxCoeff() <= 1e-12 * w1.cwiseAbs().maxCoeff());

  const CorrelatedCovariance e = correlated_bin_cov(lam, N, n01, t, RhoMoments::constant(0.3, 8));
  CHECK(e.truncation_ratio > 0.0);
  CHECK(e.truncation_ratio < 1e-3);
}

TEST_CASE("wing vector examples") {
  const NullParams n01 = NullParams::normal(0, 1);
  const Eigen::Vector3d t(-1.0, 0.0, 1.0), lam(5.0, 7.0, 5.0);
  const Eigen::VectorXd w = wing_vector(lam, t, n01, 2);
  CHECK(std::abs(w(0)) < 1e-14);
  CHECK(std::abs(w(2)) < 1e-14);
  CHECK(w(1) == doctest::Approx(-7.0 / std::sqrt(2.0)));

  const NullParams c = NullParams::chisq(1.0, 2.0);
  const Eigen::Vector3d tc(1.9, 2.0, 2.1), lc(1.0, 1.0, 1.0);
  const Eigen::VectorXd wc = wing_vector(lc, tc, c, 1);
  CHECK(wc(0) < 0.0);
  CHECK(std::abs(wc(1)) < 1e-14);
  CHECK(wc(2) > 0.0);
}

TEST_CASE("delta matches the averaged pointwise density ratio") {
  // Two-point correlation distribution G: rho = 0.1 or 0.4 with equal weight.
  const NullParams n01 = NullParams::normal(0, 1);
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(9, -2.0, 2.0);
  RhoMoments m;
  for (int n = 1; n <= 40; ++n) m.moments.push_back(0.5 * std::pow(0.1, n) + 0.5 * std::pow(0.4, n));
  const Eigen::MatrixXd delta = delta_matrix(n01, t, m);
  for (int k = 0; k < t.size(); ++k) {
    for (int l = 0; l < t.size(); ++l) {
      const double f0 = n01.density(t(k)) * n01.density(t(l));
      const double r = 0.5 * (bivariate_normal(t(k), t(l), 0.1) + bivariate_normal(t(k), t(l), 0.4)) / f0 - 1.0;
      CHECK(delta(k, l) == doctest::Approx(r).epsilon(1e-6).scale(1.0));
    }
  }
  // Bin-integrated form: the covariance of two bin indicators under a bivariate normal.
  const double lo = 0.5, hi = 0.7;
  const double joint = testing::integrate(
      [&](double x) { return testing::integrate([&](double y) { return bivariate_normal(x, y, 0.2); }, lo, hi); }, lo, hi);
  const double p = special::cdf(special::Distribution::normal(0, 1), hi) - special::cdf(special::Distribution::normal(0, 1), lo);
  const Eigen::VectorXd mid = Eigen::VectorXd::Constant(1, 0.6);
  const double approx = 0.04 * std::pow(n01.density(0.6), 2) * delta_matrix(n01, mid, RhoMoments::constant(0.2, 30))(0, 0);
  CHECK(joint - p * p == doctest::Approx(approx).epsilon(0.01));
}

TEST_CASE("rho moments validation") {
  RhoMoments bad;
  bad.moments = {0.5, 0.1};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.moments = {0.1, -0.1};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.moments = {1.5};
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(RhoMoments::constant(0.5, 3)[3] == doctest::Approx(0.125));
}

TEST_CASE("rank-one estimate of the mean correlation") {
  Eigen::VectorXd w(6);
  w << 1, -2, 0.5, 3, -1, 2;
  const BinCovariance exact{0.37 * w * w.transpose(), CovSource::Supplied, 0};
  const MeanCorrelationEstimate e = estimate_mean_correlation(exact, w);
  CHECK(e.estimate == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(e.cosine == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.ratio < 1e-12);
  CHECK_THROWS_AS(estimate_mean_correlation(exact, Eigen::VectorXd::Zero(6)), Error);
}

TEST_CASE("simulated equicorrelated chi-square: wing overlays the top eigenvector") {
  const HistogramSpec spec{0.0, 0.2, 75};
  const int N = 10000;
  const BinCovariance perm = permutation_cov(equicorrelated_replicates(spec, N, 400, 0.1, 81));
  const NullParams truth = NullParams::chisq(1.0, 2.0);
  const Eigen::VectorXd t = spec.centers();
  Eigen::VectorXd lam(t.size());
  for (int k = 0; k < t.size(); ++k) lam(k) = N * spec.bin_width * truth.density(t(k));
  const MeanCorrelationEstimate e = estimate_mean_correlation(perm, wing_vector(lam, t, truth, 1));
  CHECK(e.cosine > 0.95);
  CHECK(e.estimate > 0.8 * 0.01);
  CHECK(e.estimate < 3 * 0.01);
  CHECK(e.ratio < 0.5);
}

}  // TEST_SUITE
