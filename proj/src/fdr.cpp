#include "modematch/fdr.hpp"

#include <cmath>
#include <limits>

#include "modematch/error.hpp"

namespace modematch {

namespace {

// Ein(lambda) = sum_{j>=1} lambda^j / (j j!).
double ein_series(double lambda) {
  double term = 1.0;  // lambda^j / j!
  double sum = 0.0;
  for (int j = 1; j < 1000; ++j) {
    term *= lambda / j;
    const double add = term / j;
    sum += add;
    if (add < 1e-17 * sum) break;
  }
  return sum;
}

FdrBand make_band(const MaybeVector& est, const Eigen::MatrixXd& cov, double z) {
  FdrBand band;
  band.estimate = est;
  band.lo.resize(est.size());
  band.hi.resize(est.size());
  for (std::size_t k = 0; k < est.size(); ++k) {
    if (!est[k] || !(*est[k] > 0.0)) continue;
    const double se = std::sqrt(std::max(cov(k, k), 0.0));
    const double l = std::log(*est[k]);
    band.lo[k] = std::exp(l - z * se);
    band.hi[k] = std::exp(l + z * se);
  }
  return band;
}

}  // namespace

Eigen::MatrixXd cumulation_matrix(int K) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(K, K);
  for (int i = 0; i < K; ++i) {
    S(i, i) = 0.5;
    for (int j = i + 1; j < K; ++j) S(i, j) = 1.0;
  }
  return S;
}

Eigen::VectorXd cumulate(const Eigen::VectorXd& v, TailSide side) {
  const Eigen::Index K = v.size();
  Eigen::VectorXd out(K);
  double acc = 0.0;
  if (side == TailSide::Right) {
    for (Eigen::Index k = K - 1; k >= 0; --k) {
      out(k) = acc + 0.5 * v(k);
      acc += v(k);
    }
  } else {
    for (Eigen::Index k = 0; k < K; ++k) {
      out(k) = acc + 0.5 * v(k);
      acc += v(k);
    }
  }
  return out;
}

MaybeVector local_fdr(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted) {
  if (y.size() != fitted.size()) throw_invalid("count and fitted vectors differ in length");
  MaybeVector out(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    if (y(k) > 0.0) out[k] = fitted(k) / y(k);
  }
  return out;
}

MaybeVector tail_fdr(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted, TailSide side) {
  if (y.size() != fitted.size()) throw_invalid("count and fitted vectors differ in length");
  const Eigen::VectorXd sy = cumulate(y, side);
  const Eigen::VectorXd syhat = cumulate(fitted, side);
  MaybeVector out(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    if (sy(k) > 0.0) out[k] = syhat(k) / sy(k);
  }
  return out;
}

FdrSensitivities fdr_sensitivities(const NullFit& fit, const Eigen::MatrixXd& D_y) {
  const Eigen::VectorXd& y = fit.counts;
  const Eigen::VectorXd& yhat = fit.fitted;
  const Eigen::Index K = y.size();
  FdrSensitivities out;

  out.local = D_y;
  for (Eigen::Index k = 0; k < K; ++k) {
    if (y(k) > 0.0) {
      out.local(k, k) -= 1.0 / y(k);
    } else {
      out.local.row(k).setZero();
    }
  }

  // d yhat / d y = Vhat D_y.
  const Eigen::MatrixXd VD = yhat.asDiagonal() * D_y;
  for (TailSide side : {TailSide::Right, TailSide::Left}) {
    const Eigen::MatrixXd S = side == TailSide::Right ? cumulation_matrix(static_cast<int>(K))
                                                      : Eigen::MatrixXd(cumulation_matrix(static_cast<int>(K)).transpose());
    const Eigen::VectorXd su = S * y;
    const Eigen::VectorXd suhat = S * yhat;
    Eigen::MatrixXd B = S * VD;
    for (Eigen::Index k = 0; k < K; ++k) {
      if (su(k) > 0.0 && suhat(k) > 0.0) {
        B.row(k) = B.row(k) / suhat(k) - S.row(k) / su(k);
      } else {
        B.row(k).setZero();
      }
    }
    (side == TailSide::Right ? out.right : out.left) = std::move(B);
  }
  return out;
}

FdrCovariances fdr_covariances(const NullFit& fit, const Eigen::MatrixXd& D_y, const BinCovariance& vn) {
  const Eigen::Index K = fit.counts.size();
  if (vn.matrix.rows() != K || vn.matrix.cols() != K) throw_invalid("bin covariance size mismatch");
  const FdrSensitivities s = fdr_sensitivities(fit, D_y);
  auto sandwich = [&](const Eigen::MatrixXd& A) {
    Eigen::MatrixXd m = A * vn.matrix * A.transpose();
    return Eigen::MatrixXd(0.5 * (m + m.transpose()));
  };
  return {sandwich(s.local), sandwich(s.right), sandwich(s.left)};
}

FdrCovariances fdr_covariances(const NullFit& fit, const BinCovariance& vn) {
  return fdr_covariances(fit, fit.design.X * fit_sensitivity(fit), vn);
}

double zeta(double lambda) {
  if (!(lambda > 0.0) || std::isnan(lambda)) throw_invalid("zeta requires lambda > 0");
  if (std::isinf(lambda)) return 1.0;
  if (lambda <= 30.0) {
    // lambda e^-lambda / (1 - e^-lambda) * sum lambda^j/(j j!)
    return lambda * std::exp(-lambda) / -std::expm1(-lambda) * ein_series(lambda);
  }
  // For large lambda, e^-lambda sum_{j>=1} lambda^j/(j j!) ~ (1/lambda) sum_k k!/lambda^k
  // (asymptotic; terms shrink until k ~ lambda), less the gamma + log(lambda) part of Ein.
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < static_cast<int>(lambda); ++k) {
    term *= k / lambda;
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  const double euler_gamma = 0.57721566490153286;
  return (sum - lambda * std::exp(-lambda) * (euler_gamma + std::log(lambda))) / -std::expm1(-lambda);
}

Eigen::VectorXd expected_null_fdr(const NullFit& fit) {
  Eigen::VectorXd out(fit.fitted.size());
  for (Eigen::Index k = 0; k < out.size(); ++k) out(k) = fit.fitted(k) > 0.0 ? zeta(fit.fitted(k)) : 0.0;
  return out;
}

MaybeVector adjusted_local_fdr(const NullFit& fit) {
  MaybeVector fdr = local_fdr(fit);
  const Eigen::VectorXd z = expected_null_fdr(fit);
  for (std::size_t k = 0; k < fdr.size(); ++k) {
    if (fdr[k] && z(k) > 0.0) {
      fdr[k] = *fdr[k] / z(k);
    } else {
      fdr[k].reset();
    }
  }
  return fdr;
}

Eigen::VectorXd asymptotic_fdr_bias_factor(const Eigen::MatrixXd& X, const Eigen::VectorXd& eta_limit,
                                           const Eigen::VectorXd& eta_true) {
  if (X.cols() != eta_limit.size() || eta_limit.size() != eta_true.size()) {
    throw_invalid("bias factor dimensions disagree");
  }
  return (X * (eta_limit - eta_true)).array().exp().matrix();
}

FdrResult compute_fdr(const NullFit& fit, const BinCovariance& vn, double z) {
  FdrResult out;
  out.log_cov = fdr_covariances(fit, vn);
  out.local = make_band(local_fdr(fit), out.log_cov.local, z);
  out.right = make_band(tail_fdr(fit, TailSide::Right), out.log_cov.right, z);
  out.left = make_band(tail_fdr(fit, TailSide::Left), out.log_cov.left, z);
  out.zeta_expected_null = expected_null_fdr(fit);
  out.adjusted_local = adjusted_local_fdr(fit);
  out.below_null.assign(out.local.estimate.size(), false);
  for (std::size_t k = 0; k < out.below_null.size(); ++k) {
    if (out.local.hi[k]) out.below_null[k] = *out.local.hi[k] < out.zeta_expected_null(static_cast<Eigen::Index>(k));
  }
  return out;
}

}  // namespace modematch
