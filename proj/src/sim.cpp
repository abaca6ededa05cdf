#include "modematch/sim.hpp"

#include <algorithm>
#include <cmath>

#include "modematch/covariance.hpp"
#include "modematch/error.hpp"
#include "modematch/fdr.hpp"
#include "modematch/rng.hpp"

namespace modematch {

namespace {

constexpr std::uint64_t kGenerateStream = 0x67656e;
constexpr int kChunk = 1000;
constexpr int kMaxRetained = 10000;

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return i + 1 < v.size() ? v[i] + frac * (v[i + 1] - v[i]) : v.back();
}

// Per-chunk sums, merged in chunk order so the result ignores thread count.
struct Moments {
  Eigen::VectorXd sum, sumsq;
  std::vector<long> n;
  explicit Moments(int K) : sum(Eigen::VectorXd::Zero(K)), sumsq(Eigen::VectorXd::Zero(K)), n(K, 0) {}
  void add(int k, double x) {
    sum(k) += x;
    sumsq(k) += x * x;
    ++n[k];
  }
  void merge(const Moments& o) {
    sum += o.sum;
    sumsq += o.sumsq;
    for (std::size_t k = 0; k < n.size(); ++k) n[k] += o.n[k];
  }
};

CurveSummary summarize(const Moments& m, const std::vector<std::vector<double>>& retained) {
  const int K = static_cast<int>(m.n.size());
  CurveSummary out;
  out.mean = Eigen::VectorXd::Constant(K, std::numeric_limits<double>::quiet_NaN());
  out.se = out.mean;
  out.sd = out.mean;
  out.p05 = out.mean;
  out.p95 = out.mean;
  out.defined = m.n;
  for (int k = 0; k < K; ++k) {
    const long n = m.n[k];
    if (n == 0) continue;
    const double mean = m.sum(k) / n;
    out.mean(k) = mean;
    if (n > 1) {
      const double var = std::max(0.0, (m.sumsq(k) - n * mean * mean) / (n - 1));
      out.sd(k) = std::sqrt(var);
      out.se(k) = std::sqrt(var / n);
    }
    out.p05(k) = percentile(retained[k], 0.05);
    out.p95(k) = percentile(retained[k], 0.95);
  }
  return out;
}

}  // namespace

std::vector<double> generate(const MixtureScenario& scenario, int N, std::mt19937_64& rng) {
  scenario.validate();
  if (N < 1) throw_invalid("N must be positive");
  std::vector<double> out(N);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double sd = std::sqrt(scenario.null.second);
  for (auto& x : out) {
    if (scenario.p0 >= 1.0 || unif(rng) < scenario.p0) {
      if (scenario.null.base == NullBase::Normal) {
        x = std::normal_distribution<double>(scenario.null.first, sd)(rng);
      } else {
        x = scenario.null.first * std::gamma_distribution<double>(0.5 * scenario.null.second, 2.0)(rng);
      }
    } else {
      x = scenario.alternative.sample(rng);
    }
  }
  return out;
}

std::vector<double> generate(const MixtureScenario& scenario, int N, std::uint64_t seed) {
  auto rng = make_stream(seed, kGenerateStream, 0);
  return generate(scenario, N, rng);
}

void SweepConfig::validate() const {
  scenario.validate();
  if (reps < 2) throw_invalid("sweep needs at least 2 replicates");
  if (N < 100) throw_invalid("sweep needs N >= 100");
  if (grid.empty()) throw_invalid("sweep grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw_invalid("sweep grid must be strictly increasing");
  }
  if (!(fixed_other > 0.0)) throw_invalid("fixed tuning value must be positive");
}

SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const FamilySpec& family = cfg.scenario.family;
  const int p = family.dim() + 1;
  const Eigen::VectorXd truth = cfg.scenario.truth().augmented();
  std::vector<std::string> names{"log_p0"};
  for (const auto& n : family.theta_names()) names.push_back(n);

  SweepResult result;
  for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
    SweepPoint point;
    point.value = cfg.grid[g];
    point.delta = cfg.axis == SweepAxis::BinWidth ? cfg.grid[g] : cfg.fixed_other;
    point.t0 = cfg.axis == SweepAxis::FitInterval ? cfg.grid[g] : cfg.fixed_other;
    const ResolvedGeometry geometry = scenario_geometry(cfg.scenario, point.delta, point.t0);

    Eigen::MatrixXd est(cfg.reps, p), se(cfg.reps, p);
    std::vector<char> ok(cfg.reps, 0);
    parallel_for(cfg.reps, cfg.threads, [&](int r) {
      auto rng = make_stream(cfg.seed, g, static_cast<std::uint64_t>(r));
      const std::vector<double> stats = generate(cfg.scenario, cfg.N, rng);
      try {
        const PipelineResult res = run_pipeline(stats, family, geometry);
        const FitCovariances cov = param_cov(res.fit, multinomial_cov(res.fit));
        est.row(r) = res.fit.usual.augmented().transpose();
        se.row(r) = cov.se_theta_plus().transpose();
        ok[r] = 1;
      } catch (const Error&) {
        ok[r] = 0;
      }
    });

    std::vector<int> good;
    for (int r = 0; r < cfg.reps; ++r) {
      if (ok[r]) good.push_back(r);
    }
    point.successes = static_cast<int>(good.size());
    point.failures = cfg.reps - point.successes;
    for (int j = 0; j < p; ++j) {
      ParameterSummary s;
      s.name = names[j];
      s.truth = truth(j);
      if (!good.empty()) {
        const double n = static_cast<double>(good.size());
        double sum = 0.0, sum_se = 0.0;
        int covered = 0;
        for (int r : good) {
          sum += est(r, j);
          sum_se += se(r, j);
          if (std::abs(est(r, j) - s.truth) <= 1.959963984540054 * se(r, j)) ++covered;
        }
        s.mean = sum / n;
        double ss = 0.0, sq = 0.0;
        for (int r : good) {
          ss += (est(r, j) - s.mean) * (est(r, j) - s.mean);
          sq += (est(r, j) - s.truth) * (est(r, j) - s.truth);
        }
        s.variance = ss / n;
        s.sd = std::sqrt(s.variance);
        s.bias = s.mean - s.truth;
        s.mse = sq / n;
        s.mean_se = sum_se / n;
        s.coverage = covered / n;
      }
      point.params.push_back(s);
    }
    result.points.push_back(std::move(point));
  }
  return result;
}

FdrBiasResult fdr_bias_experiment(const FdrBiasConfig& cfg) {
  cfg.scenario.validate();
  if (cfg.reps < 2) throw_invalid("experiment needs at least 2 replicates");
  if (cfg.N < 1) throw_invalid("N must be positive");
  const ResolvedGeometry geometry = scenario_geometry(cfg.scenario, cfg.delta, cfg.t0);
  const HistogramSpec& spec = geometry.spec;
  const int K = spec.num_bins;
  const double scale = cfg.N * spec.bin_width;

  FdrBiasResult out;
  out.mask = geometry.mask;
  out.centers = spec.centers();
  out.lambda.resize(K);
  out.lambda_null.resize(K);
  for (int k = 0; k < K; ++k) {
    const double t = out.centers(k);
    out.lambda(k) = scale * cfg.scenario.mixture_density(t);
    out.lambda_null(k) = cfg.scenario.null.in_support(t) ? scale * cfg.scenario.p0 * cfg.scenario.null.density(t) : 0.0;
  }
  out.fdr_true.resize(K);
  out.fdr_zeta.resize(K);
  for (int k = 0; k < K; ++k) {
    out.fdr_true(k) = out.lambda(k) > 0.0 ? out.lambda_null(k) / out.lambda(k) : 0.0;
    out.fdr_zeta(k) = out.lambda(k) > 0.0 ? out.fdr_true(k) * zeta(out.lambda(k)) : 0.0;
  }
  const Eigen::VectorXd s_lambda = cumulate(out.lambda, TailSide::Right);
  const Eigen::VectorXd s_null = cumulate(out.lambda_null, TailSide::Right);
  out.right_true = s_null.cwiseQuotient(s_lambda.cwiseMax(1e-300));

  const DesignMatrix dm = build_design(spec, static_cast<double>(cfg.N), cfg.scenario.family, geometry.mask);
  const int retained = std::min(cfg.reps, kMaxRetained);
  std::vector<std::vector<double>> keep_local(K), keep_right(K);
  std::vector<std::vector<double>> local_rows(retained, std::vector<double>(K, std::nan(""))),
      right_rows(retained, std::vector<double>(K, std::nan("")));

  const int chunks = (cfg.reps + kChunk - 1) / kChunk;
  std::vector<Moments> local_m(chunks, Moments(K)), right_m(chunks, Moments(K));
  std::vector<int> chunk_failures(chunks, 0);

  parallel_for(chunks, cfg.threads, [&](int c) {
    const int begin = c * kChunk;
    const int end = std::min(cfg.reps, begin + kChunk);
    Eigen::VectorXd y(K);
    for (int r = begin; r < end; ++r) {
      auto rng = make_stream(cfg.seed, 0x666472ULL, static_cast<std::uint64_t>(r));
      for (int k = 0; k < K; ++k) {
        y(k) = out.lambda(k) > 0.0 ? static_cast<double>(std::poisson_distribution<long>(out.lambda(k))(rng)) : 0.0;
      }
      Eigen::VectorXd null_counts;
      if (cfg.empirical_null) {
        try {
          null_counts = fit_null(dm, y).fitted;
        } catch (const Error&) {
          ++chunk_failures[c];
          continue;
        }
      } else {
        null_counts = out.lambda_null;
      }
      const MaybeVector local = local_fdr(y, null_counts);
      const MaybeVector right = tail_fdr(y, null_counts, TailSide::Right);
      for (int k = 0; k < K; ++k) {
        if (local[k]) {
          local_m[c].add(k, *local[k]);
          if (r < retained) local_rows[r][k] = *local[k];
        }
        if (right[k]) {
          right_m[c].add(k, *right[k]);
          if (r < retained) right_rows[r][k] = *right[k];
        }
      }
    }
  });

  Moments local_all(K), right_all(K);
  for (int c = 0; c < chunks; ++c) {
    local_all.merge(local_m[c]);
    right_all.merge(right_m[c]);
    out.failures += chunk_failures[c];
  }
  for (int r = 0; r < retained; ++r) {
    for (int k = 0; k < K; ++k) {
      if (!std::isnan(local_rows[r][k])) keep_local[k].push_back(local_rows[r][k]);
      if (!std::isnan(right_rows[r][k])) keep_right[k].push_back(right_rows[r][k]);
    }
  }
  out.local = summarize(local_all, keep_local);
  out.right = summarize(right_all, keep_right);
  return out;
}

}  // namespace modematch
