#include "modematch/covariance.hpp"

#include <cmath>

#include "modematch/error.hpp"
#include "modematch/rng.hpp"

namespace modematch {

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

const char* to_string(CovSource source) {
  switch (source) {
    case CovSource::Multinomial: return "multinomial";
    case CovSource::Overdispersed: return "overdispersed";
    case CovSource::Bootstrap: return "bootstrap";
    case CovSource::Permutation: return "permutation";
    case CovSource::Supplied: return "supplied";
  }
  return "unknown";
}

BinCovariance multinomial_cov(const Eigen::VectorXd& fitted, double total) {
  if (!(total > 0.0)) throw_invalid("multinomial covariance needs N > 0");
  BinCovariance out;
  out.matrix = Eigen::MatrixXd(fitted.asDiagonal()) - fitted * fitted.transpose() / total;
  out.source = CovSource::Multinomial;
  return out;
}

BinCovariance multinomial_cov(const NullFit& fit) { return multinomial_cov(fit.fitted, fit.total()); }

BinCovariance overdispersed_cov(const NullFit& fit) {
  BinCovariance out = multinomial_cov(fit);
  out.matrix *= fit.overdispersion;
  out.source = CovSource::Overdispersed;
  return out;
}

Eigen::MatrixXd fit_sensitivity(const NullFit& fit) {
  const DesignMatrix& dm = fit.design;
  const Eigen::VectorXd wv = dm.weights.cwiseProduct(fit.fitted);
  const Eigen::MatrixXd bread = dm.X.transpose() * wv.asDiagonal() * dm.X;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(bread);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    throw_numerical("X'WVX is singular");
  }
  return ldlt.solve(dm.X.transpose() * dm.weights.asDiagonal());
}

FitCovariances param_cov(const NullFit& fit, const BinCovariance& vn) {
  const DesignMatrix& dm = fit.design;
  const int K = dm.bins();
  if (vn.matrix.rows() != K || vn.matrix.cols() != K) {
    throw_invalid("bin covariance is " + std::to_string(vn.matrix.rows()) + "x" +
                  std::to_string(vn.matrix.cols()) + " but the histogram has " + std::to_string(K) +
                  " bins");
  }
  FitCovariances out;
  out.sensitivity = fit_sensitivity(fit);
  const Eigen::MatrixXd& G = out.sensitivity;
  const Eigen::MatrixXd GVn = G * vn.matrix;  // p x K
  out.cov_eta_plus = symmetrize(GVn * G.transpose());
  const Eigen::MatrixXd D = jacobian_D(dm.family, fit.canonical);
  out.cov_theta_plus = symmetrize(D * out.cov_eta_plus * D.transpose());
  out.D_y = dm.X * G;

  // V D_y = (V X) G, so every K x K product goes through a p-dimensional middle.
  const Eigen::MatrixXd VX = fit.fitted.asDiagonal() * dm.X;
  out.cov_fitted = symmetrize(VX * out.cov_eta_plus * VX.transpose());
  const Eigen::MatrixXd MVn = VX * GVn;
  out.cov_alternative = symmetrize(vn.matrix - MVn - MVn.transpose() + out.cov_fitted);
  return out;
}

Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& samples) {
  if (samples.rows() < 2) throw_invalid("empirical covariance needs at least 2 rows");
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  return symmetrize(centered.transpose() * centered / static_cast<double>(samples.rows() - 1));
}

BinCovariance permutation_cov(const std::vector<std::vector<double>>& replicate_counts) {
  if (replicate_counts.size() < 2) throw_invalid("permutation covariance needs at least 2 replicates");
  const std::size_t K = replicate_counts.front().size();
  if (K == 0) throw_invalid("replicate histograms are empty");
  Eigen::MatrixXd rows(replicate_counts.size(), K);
  for (std::size_t r = 0; r < replicate_counts.size(); ++r) {
    if (replicate_counts[r].size() != K) {
      throw_data("replicate " + std::to_string(r) + " has " + std::to_string(replicate_counts[r].size()) +
                 " bins, expected " + std::to_string(K));
    }
    for (std::size_t k = 0; k < K; ++k) rows(r, k) = replicate_counts[r][k];
  }
  BinCovariance out;
  out.matrix = empirical_covariance(rows);
  out.source = CovSource::Permutation;
  out.replicates = static_cast<int>(replicate_counts.size());
  return out;
}

BootstrapResult bootstrap_cov(std::span<const double> statistics, const FamilySpec& family,
                              const ResolvedGeometry& geometry, int B, std::uint64_t seed, int threads) {
  if (B < 2) throw_invalid("bootstrap needs at least 2 replicates");
  if (statistics.empty()) throw_data("no statistics to resample");
  const int K = geometry.spec.num_bins;
  const int p = family.dim() + 1;
  Eigen::MatrixXd counts(B, K);
  Eigen::MatrixXd theta(B, p);
  Eigen::MatrixXd eta(B, p);
  std::vector<char> ok(B, 0);
  const std::size_t N = statistics.size();

  parallel_for(B, threads, [&](int r) {
    auto rng = make_stream(seed, 0x626f6f74ULL, static_cast<std::uint64_t>(r));
    std::uniform_int_distribution<std::size_t> pick(0, N - 1);
    std::vector<double> sample(N);
    for (auto& x : sample) x = statistics[pick(rng)];
    try {
      PipelineResult res = run_pipeline(sample, family, geometry);
      counts.row(r) = res.fit.counts.transpose();
      theta.row(r) = res.fit.usual.augmented().transpose();
      eta.row(r) = res.fit.canonical.augmented().transpose();
      ok[r] = 1;
    } catch (const Error&) {
      ok[r] = 0;
    }
  });

  std::vector<int> good;
  for (int r = 0; r < B; ++r) {
    if (ok[r]) good.push_back(r);
  }
  BootstrapResult out;
  out.requested = B;
  out.failures = B - static_cast<int>(good.size());
  if (out.failures * 10 > B) {
    throw_numerical(std::to_string(out.failures) + " of " + std::to_string(B) +
                    " bootstrap replicates failed to fit");
  }
  if (good.size() < 2) throw_numerical("fewer than 2 bootstrap replicates succeeded");
  auto take = [&](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd sub(good.size(), m.cols());
    for (std::size_t i = 0; i < good.size(); ++i) sub.row(i) = m.row(good[i]);
    return sub;
  };
  out.bins.matrix = empirical_covariance(take(counts));
  out.bins.source = CovSource::Bootstrap;
  out.bins.replicates = static_cast<int>(good.size());
  out.cov_theta_plus = empirical_covariance(take(theta));
  out.cov_eta_plus = empirical_covariance(take(eta));
  return out;
}

bool is_valid_covariance(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
  return m.rows() == 0 || m.diagonal().minCoeff() >= -1e-12 * scale;
}

}  // namespace modematch
