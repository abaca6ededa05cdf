#include <cmath>
#include <random>
#include <vector>

#include "modematch/error.hpp"
#include "modematch/fdr.hpp"
#include "modematch/sim.hpp"
#include "support.hpp"

using namespace modematch;

namespace {

NullFit sample_fit(bool chisq, int N, std::uint64_t seed) {
  const MixtureScenario sc = chisq ? chisq_scenario(0.9) : normal_scenario(0.9);
  const ResolvedGeometry geo = scenario_geometry(sc, chisq ? 0.2 : 0.1, chisq ? 4.0 : 1.0);
  const Histogram h = build_histogram(generate(sc, N, seed), geo.spec);
  return fit_null(build_design(h, sc.family, geo.mask), h.count_vector());
}

// Monte Carlo E(lambda / y | y > 0) with its standard error.
std::pair<double, double> zeta_oracle(double lambda, long draws, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::poisson_distribution<long> pois(lambda);
  double sum = 0.0, sum2 = 0.0;
  long n = 0;
  for (long i = 0; i < draws; ++i) {
    const long y = pois(g);
    if (y == 0) continue;
    const double v = lambda / static_cast<double>(y);
    sum += v;
    sum2 += v * v;
    ++n;
  }
  const double mean = sum / n;
  return {mean, std::sqrt((sum2 / n - mean * mean) / n)};
}

}  // namespace

TEST_SUITE("fdr") {

TEST_CASE("cumulation matrix") {
  const Eigen::MatrixXd S = cumulation_matrix(4);
  Eigen::Matrix4d expect;
  expect << 0.5, 1, 1, 1, 0, 0.5, 1, 1, 0, 0, 0.5, 1, 0, 0, 0, 0.5;
  CHECK(S == expect);
  auto g = testing::rng(51);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd v(17);
    for (int k = 0; k < 17; ++k) v(k) = std::floor(testing::uniform(g, 0, 100));
    const Eigen::MatrixXd S17 = cumulation_matrix(17);
    CHECK(cumulate(v, TailSide::Right) == S17 * v);
    CHECK(cumulate(v, TailSide::Left) == S17.transpose() * v);
  }
}

TEST_CASE("local and tail fdr examples") {
  const Eigen::Vector3d y(4, 2, 2), yhat(4, 1, 1);
  const MaybeVector right = tail_fdr(y, yhat, TailSide::Right);
  CHECK(*right[0] == doctest::Approx(4.0 / 6.0));
  const MaybeVector local = local_fdr(y, yhat);
  CHECK(*local[1] == doctest::Approx(0.5));

  const Eigen::Vector3d z(3, 0, 0), zhat(2.5, 0.2, 0.1);
  const MaybeVector lz = local_fdr(z, zhat);
  CHECK(lz[0].has_value());
  CHECK_FALSE(lz[1].has_value());
  CHECK_FALSE(lz[2].has_value());
  const MaybeVector rz = tail_fdr(z, zhat, TailSide::Right);
  CHECK(rz[0].has_value());
  CHECK_FALSE(rz[2].has_value());
  const MaybeVector lt = tail_fdr(z, zhat, TailSide::Left);
  CHECK(lt[2].has_value());
}

TEST_CASE("identity, nonnegativity and scale invariance") {
  auto g = testing::rng(52);
  for (int rep = 0; rep < 100; ++rep) {
    const int K = 5 + rep % 20;
    Eigen::VectorXd y(K), yhat(K);
    for (int k = 0; k < K; ++k) {
      y(k) = rep % 3 == 0 && k % 4 == 0 ? 0.0 : std::floor(testing::uniform(g, 0, 50));
      yhat(k) = testing::uniform(g, 0, 60);
    }
    for (const MaybeVector& m : {local_fdr(y, y), tail_fdr(y, y, TailSide::Right), tail_fdr(y, y, TailSide::Left)}) {
      for (const auto& v : m) {
        if (v) CHECK(*v == doctest::Approx(1.0).epsilon(1e-14));
      }
    }
    const double c = testing::uniform(g, 0.1, 10);
    const MaybeVector a = tail_fdr(y, yhat, TailSide::Right);
    const MaybeVector b = tail_fdr(c * y, c * yhat, TailSide::Right);
    const MaybeVector la = local_fdr(y, yhat);
    const MaybeVector lb = local_fdr(c * y, c * yhat);
    for (int k = 0; k < K; ++k) {
      CHECK(a[k].has_value() == b[k].has_value());
      if (a[k]) {
        CHECK(*a[k] >= 0.0);
        CHECK(*b[k] == doctest::Approx(*a[k]).epsilon(1e-12));
      }
      CHECK(la[k].has_value() == (y(k) > 0));
      if (la[k]) {
        CHECK(*la[k] == yhat(k) / y(k));
        CHECK(*lb[k] == doctest::Approx(*la[k]).epsilon(1e-12));
      }
    }
    // The tail estimate is the y-weighted average of local fdr with S weights.
    const Eigen::MatrixXd S = cumulation_matrix(K);
    for (int k = 0; k < K; ++k) {
      if (!a[k]) continue;
      double num = 0.0, den = 0.0;
      for (int j = 0; j < K; ++j) {
        num += S(k, j) * y(j) * (la[j] ? *la[j] : 0.0) + (y(j) == 0 ? S(k, j) * yhat(j) : 0.0);
        den += S(k, j) * y(j);
      }
      CHECK(*a[k] == doctest::Approx(num / den).epsilon(1e-12));
    }
  }
}

TEST_CASE("leftmost right-tail fdr is close to p0") {
  const NullFit f = sample_fit(true, 20000, 53);
  const MaybeVector r = tail_fdr(f, TailSide::Right);
  REQUIRE(r[0].has_value());
  CHECK(*r[0] == doctest::Approx(f.fitted.sum() / f.counts.sum()).epsilon(0.05));
  CHECK(*r[0] == doctest::Approx(f.p0()).epsilon(0.05));
}

TEST_CASE("zeta reference values") {
  CHECK(zeta(0.01) == doctest::Approx(0.01).epsilon(0.003));
  CHECK(zeta(1.0) == doctest::Approx(0.7669883540794343).epsilon(1e-12));
  CHECK(zeta(1e6) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(zeta(std::numeric_limits<double>::infinity()) == 1.0);
  CHECK_THROWS_AS(zeta(0.0), Error);
  CHECK_THROWS_AS(zeta(-2.0), Error);
  // Both branches agree at the switch.
  CHECK(std::abs(zeta(30.0) - zeta(std::nextafter(30.0, 31.0))) < 1e-10);
  CHECK(zeta(30.0) == doctest::Approx(1.0358136537597842).epsilon(1e-12));
}

TEST_CASE("zeta matches the Monte Carlo oracle") {
  const auto [mean1, se1] = zeta_oracle(1.0, 10000000, 54);
  CHECK(std::abs(zeta(1.0) - mean1) < 3 * se1);
  const auto [mean2, se2] = zeta_oracle(0.01, 10000000, 55);
  CHECK(std::abs(zeta(0.01) - mean2) < 3 * se2);
  int i = 0;
  for (double lam = 0.05; lam < 200; lam *= 2.3, ++i) {
    const auto [m, se] = zeta_oracle(lam, 1000000, 56 + i);
    CHECK(std::abs(zeta(lam) - m) < 3.5 * se);
  }
}

TEST_CASE("zeta shape: rises from 0, exceeds 1, returns to 1") {
  double prev = 0.0;
  for (double lam = 1e-4; lam < 3.0; lam *= 1.05) {
    const double z = zeta(lam);
    CHECK(z > prev);
    prev = z;
  }
  // E(lambda/y | y > 0) > 1 for large lambda by Jensen, so the curve overshoots and falls back.
  CHECK(zeta(4.0) > 1.3);
  CHECK(zeta(100.0) > zeta(1000.0));
  CHECK(zeta(1000.0) > 1.0);
}

TEST_CASE("zeta adjustment of small-count fdr values") {
  NullFit f;
  f.counts = Eigen::Vector2d(2, 3);
  f.fitted = Eigen::Vector2d(2 * 0.1173, 3 * 0.2831);
  const MaybeVector adj = adjusted_local_fdr(f);
  CHECK(*adj[0] == doctest::Approx(0.5310).epsilon(1e-3));
  CHECK(*adj[1] == doctest::Approx(0.4169).epsilon(1e-3));
  f.fitted = Eigen::Vector2d(5000, 4800);
  f.counts = Eigen::Vector2d(5100, 4700);
  const MaybeVector near = adjusted_local_fdr(f);
  CHECK(*near[0] == doctest::Approx(5000.0 / 5100).epsilon(1e-3));
}

TEST_CASE("expected null fdr falls in the far tails") {
  const NullFit f = sample_fit(false, 10000, 57);
  const Eigen::VectorXd z = expected_null_fdr(f);
  Eigen::Index centre;
  f.fitted.maxCoeff(&centre);
  CHECK(z(centre) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(z(f.fitted.size() - 1) < 0.1);
  CHECK(z(0) < 0.1);
}

TEST_CASE("sensitivities match finite differences of the refit") {
  for (bool chisq : {false, true}) {
    const NullFit f = sample_fit(chisq, 10000, chisq ? 58 : 59);
    const FitCovariances c = param_cov(f, multinomial_cov(f));
    const FdrSensitivities s = fdr_sensitivities(f, c.D_y);
    const double h = 1e-4;
    for (int j = 0; j < f.counts.size(); j += 7) {
      if (f.counts(j) < 1) continue;
      Eigen::VectorXd up = f.counts, dn = f.counts;
      up(j) += h;
      dn(j) -= h;
      const NullFit fu = fit_null(f.design, up);
      const NullFit fd = fit_null(f.design, dn);
      const MaybeVector lu = local_fdr(fu), ld = local_fdr(fd);
      const MaybeVector ru = tail_fdr(fu, TailSide::Right), rd = tail_fdr(fd, TailSide::Right);
      const MaybeVector eu = tail_fdr(fu, TailSide::Left), ed = tail_fdr(fd, TailSide::Left);
      for (int k = 0; k < f.counts.size(); ++k) {
        if (lu[k] && ld[k]) {
          const double fdv = (std::log(*lu[k]) - std::log(*ld[k])) / (2 * h);
          CHECK(std::abs(s.local(k, j) - fdv) < 1e-4 * std::max(1.0, std::abs(fdv)));
        }
        if (ru[k] && rd[k]) {
          const double fdv = (std::log(*ru[k]) - std::log(*rd[k])) / (2 * h);
          CHECK(std::abs(s.right(k, j) - fdv) < 1e-4 * std::max(1.0, std::abs(fdv)));
        }
        if (eu[k] && ed[k]) {
          const double fdv = (std::log(*eu[k]) - std::log(*ed[k])) / (2 * h);
          CHECK(std::abs(s.left(k, j) - fdv) < 1e-4 * std::max(1.0, std::abs(fdv)));
        }
      }
    }
  }
}

TEST_CASE("fdr covariances: zero Vn, symmetry and wider bands under a larger Vn") {
  const NullFit f = sample_fit(false, 10000, 60);
  const BinCovariance zero{Eigen::MatrixXd::Zero(f.counts.size(), f.counts.size()), CovSource::Supplied, 0};
  const FdrCovariances z = fdr_covariances(f, zero);
  CHECK(z.local.isZero());
  CHECK(z.right.isZero());
  CHECK(z.left.isZero());

  const BinCovariance m = multinomial_cov(f);
  const FdrCovariances c = fdr_covariances(f, m);
  CHECK(is_valid_covariance(c.local, 1e-9));
  CHECK(is_valid_covariance(c.right, 1e-9));
  CHECK(is_valid_covariance(c.left, 1e-9));

  BinCovariance big = m;
  big.matrix *= 2.0;
  const FdrResult a = compute_fdr(f, m);
  const FdrResult b = compute_fdr(f, big);
  for (std::size_t k = 0; k < a.local.estimate.size(); ++k) {
    if (!a.local.estimate[k]) {
      CHECK_FALSE(a.local.lo[k].has_value());
      continue;
    }
    CHECK(*a.local.lo[k] <= *a.local.estimate[k]);
    CHECK(*a.local.hi[k] >= *a.local.estimate[k]);
    CHECK(*b.local.hi[k] - *b.local.lo[k] >= *a.local.hi[k] - *a.local.lo[k] - 1e-12);
    const double se = std::sqrt(std::max(0.0, a.log_cov.local(k, k)));
    CHECK(*a.local.hi[k] == doctest::Approx(*a.local.estimate[k] * std::exp(1.959963984540054 * se)));
  }
}

TEST_CASE("below-null flag follows the band and the zeta curve") {
  const NullFit f = sample_fit(true, 20000, 61);
  const FdrResult r = compute_fdr(f, multinomial_cov(f));
  for (std::size_t k = 0; k < r.below_null.size(); ++k) {
    const bool expect = r.local.hi[k] && *r.local.hi[k] < r.zeta_expected_null(static_cast<Eigen::Index>(k));
    CHECK(r.below_null[k] == expect);
  }
}

TEST_CASE("asymptotic bias factor") {
  const NullFit f = sample_fit(false, 5000, 62);
  const Eigen::VectorXd eta = f.canonical.augmented();
  CHECK((asymptotic_fdr_bias_factor(f.design.X, eta, eta).array() == 1.0).all());
  const Eigen::Vector3d shift(0.01, -0.02, 0.003);
  const Eigen::VectorXd b = asymptotic_fdr_bias_factor(f.design.X, eta + shift, eta);
  for (int k = 0; k < b.size(); ++k) CHECK(b(k) == doctest::Approx(std::exp(f.design.X.row(k).dot(shift))));
}

TEST_CASE("mean of the local fdr estimate over Poisson counts is fdr times zeta") {
  // Known null: fdr-hat = lambda0 / y, so E(fdr-hat | y > 0) = (lambda0/lambda) zeta(lambda).
  std::mt19937_64 g(63);
  for (double lambda : {0.3, 1.5, 6.0, 40.0}) {
    const double lambda0 = 0.7 * lambda;
    std::poisson_distribution<long> pois(lambda);
    double sum = 0.0, sum2 = 0.0;
    long n = 0;
    for (int r = 0; r < 100000; ++r) {
      const long y = pois(g);
      if (y == 0) continue;
      const double v = lambda0 / y;
      sum += v;
      sum2 += v * v;
      ++n;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 0.7 * zeta(lambda)) < 3.5 * se);
  }
}

}  // TEST_SUITE
