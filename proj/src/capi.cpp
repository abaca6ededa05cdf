#include "modematch/modematch.h"

#include <charconv>
#include <cstdlib>
#include <cstring>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <new>
#include <string>
#include <string_view>

#include "modematch/artifact.hpp"
#include "modematch/error.hpp"
#include "modematch/ingest.hpp"
#include "modematch/reports.hpp"

using namespace modematch;

struct mm_fit {
  FitArtifact artifact;
  NullFit fit;
};

namespace {

thread_local std::string g_last_error;

template <class F>
mm_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return MM_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<mm_status>(static_cast<int>(e.kind()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MM_ERR_NUMERICAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MM_ERR_NUMERICAL;
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

double parse_double(std::string_view s, const std::string& what) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw_invalid("cannot parse '" + std::string(s) + "' as a number in " + what);
  }
  return v;
}

std::map<std::string, double> parse_fixed(const char* text) {
  std::map<std::string, double> out;
  if (!text) return out;
  std::string_view rest(text);
  while (!rest.empty()) {
    const std::size_t comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) throw_invalid("fixed parameter '" + std::string(item) + "' is not key=value");
    out[std::string(item.substr(0, eq))] = parse_double(item.substr(eq + 1), "fixed parameters");
  }
  return out;
}

void require(const void* p, const char* name) {
  if (!p) throw_invalid(std::string(name) + " must not be null");
}

MixtureScenario scenario_named(const char* name, double p0) {
  require(name, "scenario");
  const std::string s(name);
  if (s == "normal") return normal_scenario(p0);
  if (s == "chisq") return chisq_scenario(p0);
  throw_invalid("unknown scenario '" + s + "' (expected normal or chisq)");
}

}  // namespace

extern "C" {

const char* mm_version(void) { return MODEMATCH_VERSION_STRING; }

const char* mm_last_error(void) { return g_last_error.c_str(); }

void mm_free_string(char* s) { std::free(s); }

void mm_free_doubles(double* p) { std::free(p); }

void mm_fit_options_init(mm_fit_options* o) {
  if (!o) return;
  *o = mm_fit_options{};
  o->family = "normal";
  o->seed = 1;
}

void mm_simulate_options_init(mm_simulate_options* o) {
  if (!o) return;
  *o = mm_simulate_options{};
  o->scenario = "normal";
  o->mode = "sweep-interval";
  o->p0 = 1.0;
  o->n = 10000;
  o->reps = 100;
  o->bin_width = 0.1;
  o->t0 = 1.0;
  o->seed = 1;
}

mm_status mm_read_statistics(const char* path, const char* csv_column, double** values, size_t* count) {
  return guard([&] {
    require(path, "path");
    require(values, "values");
    require(count, "count");
    const std::vector<double> v =
        csv_column ? read_statistics(path, InputFormat::Csv, csv_column) : read_statistics(path, InputFormat::Plain);
    auto* out = static_cast<double*>(std::malloc(v.size() * sizeof(double)));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, v.data(), v.size() * sizeof(double));
    *values = out;
    *count = v.size();
  });
}

mm_status mm_fit_create(const double* statistics, size_t count, const mm_fit_options* options, mm_fit** fit) {
  return guard([&] {
    require(statistics, "statistics");
    require(options, "options");
    require(fit, "fit");
    *fit = nullptr;
    if (count == 0) throw_data("no statistics supplied");
    const std::vector<double> stats(statistics, statistics + count);

    FitConfig config;
    config.family = FamilySpec::parse(options->family ? options->family : "normal", parse_fixed(options->fixed_params));
    if (options->bin_width > 0.0) config.bin_width = options->bin_width;
    if (options->has_origin) config.origin = options->origin;
    if (options->num_bins > 0) config.num_bins = options->num_bins;
    if (options->has_interval) config.interval = std::make_pair(options->interval_lo, options->interval_hi);
    if (options->bootstrap < 0) throw_invalid("bootstrap replicate count must be nonnegative");

    const ResolvedGeometry geometry = resolve_geometry(stats, config);
    const PipelineResult result = run_pipeline(stats, config.family, geometry);

    std::vector<ParameterCovariance> covs;
    const BinCovariance multinomial = multinomial_cov(result.fit);
    covs.push_back(parameter_covariance(param_cov(result.fit, multinomial), multinomial));
    if (options->perm_cov_path) {
      const BinCovariance perm = read_bin_covariance(options->perm_cov_path);
      covs.push_back(parameter_covariance(param_cov(result.fit, perm), perm));
    }
    if (options->bootstrap > 0) {
      const BootstrapResult boot =
          bootstrap_cov(stats, config.family, geometry, options->bootstrap, options->seed, options->threads);
      covs.push_back({"bootstrap", boot.bins.replicates, boot.failures, boot.cov_eta_plus, boot.cov_theta_plus});
    }
    Provenance prov{statistics_digest(stats), count, options->seed, MODEMATCH_VERSION_STRING};

    auto handle = std::make_unique<mm_fit>();
    handle->artifact = make_artifact(result, std::move(covs), std::move(prov));
    handle->fit = result.fit;
    *fit = handle.release();
  });
}

void mm_fit_destroy(mm_fit* fit) { delete fit; }

mm_status mm_fit_to_json(const mm_fit* fit, char** json) {
  return guard([&] {
    require(fit, "fit");
    require(json, "json");
    *json = copy_string(render_artifact(fit->artifact));
  });
}

mm_status mm_fit_from_json(const char* json, mm_fit** fit) {
  return guard([&] {
    require(json, "json");
    require(fit, "fit");
    *fit = nullptr;
    auto handle = std::make_unique<mm_fit>();
    handle->artifact = parse_artifact(json);
    handle->fit = rebuild_fit(handle->artifact);
    *fit = handle.release();
  });
}

int mm_fit_num_params(const mm_fit* fit) { return fit ? static_cast<int>(fit->artifact.theta_plus.size()) : 0; }

mm_status mm_fit_theta(const mm_fit* fit, double* out, size_t size) {
  return guard([&] {
    require(fit, "fit");
    require(out, "out");
    const Eigen::VectorXd& th = fit->artifact.theta_plus;
    if (size < static_cast<size_t>(th.size())) throw_invalid("output buffer too small");
    for (Eigen::Index i = 0; i < th.size(); ++i) out[i] = th(i);
  });
}

mm_status mm_fit_theta_se(const mm_fit* fit, double* out, size_t size) {
  return guard([&] {
    require(fit, "fit");
    require(out, "out");
    const Eigen::MatrixXd& c = fit->artifact.covariances.at(0).cov_theta_plus;
    if (size < static_cast<size_t>(c.rows())) throw_invalid("output buffer too small");
    for (Eigen::Index i = 0; i < c.rows(); ++i) out[i] = std::sqrt(std::max(c(i, i), 0.0));
  });
}

double mm_fit_overdispersion(const mm_fit* fit) { return fit ? fit->artifact.overdispersion : 0.0; }

mm_status mm_fdr_csv(const mm_fit* fit, const double* statistics, size_t count, const char* perm_cov_path,
                     int adjust_zeta, int cap_at_one, char** csv) {
  return guard([&] {
    require(fit, "fit");
    require(statistics, "statistics");
    require(csv, "csv");
    const std::vector<double> stats(statistics, statistics + count);
    const std::string digest = statistics_digest(stats);
    if (digest != fit->artifact.provenance.input_digest || count != fit->artifact.provenance.input_count) {
      throw_data("statistics do not match the fit (digest " + digest + ", fit was built from " +
                 fit->artifact.provenance.input_digest + ")");
    }
    const BinCovariance vn = perm_cov_path ? read_bin_covariance(perm_cov_path) : multinomial_cov(fit->fit);
    const FdrResult result = compute_fdr(fit->fit, vn);
    FdrCsvOptions opts;
    opts.adjust_zeta = adjust_zeta != 0;
    opts.cap_at_one = cap_at_one != 0;
    *csv = copy_string(fdr_csv(fit->fit, result, opts));
  });
}

mm_status mm_bias_csv(const char* scenario, double p0, double bin_width, double t0, char** csv) {
  return guard([&] {
    require(csv, "csv");
    const MixtureScenario s = scenario_named(scenario, p0);
    const AsymptoticBias b = asymptotic_bias(s, scenario_geometry(s, bin_width, t0));
    *csv = copy_string(bias_csv(s.family, b));
  });
}

mm_status mm_simulate_csv(const mm_simulate_options* o, char** csv) {
  return guard([&] {
    require(o, "options");
    require(csv, "csv");
    require(o->mode, "mode");
    const MixtureScenario s = scenario_named(o->scenario, o->p0);
    const std::string mode(o->mode);
    if (mode == "fdr-bias") {
      FdrBiasConfig cfg;
      cfg.scenario = s;
      cfg.N = o->n;
      cfg.reps = o->reps;
      cfg.delta = o->bin_width;
      cfg.t0 = o->t0;
      cfg.empirical_null = o->empirical_null != 0;
      cfg.seed = o->seed;
      cfg.threads = o->threads;
      *csv = copy_string(fdr_bias_csv(fdr_bias_experiment(cfg)));
      return;
    }
    SweepConfig cfg;
    cfg.scenario = s;
    cfg.N = o->n;
    cfg.reps = o->reps;
    if (mode == "sweep-bin-width") {
      cfg.axis = SweepAxis::BinWidth;
      cfg.fixed_other = o->t0;
    } else if (mode == "sweep-interval") {
      cfg.axis = SweepAxis::FitInterval;
      cfg.fixed_other = o->bin_width;
    } else {
      throw_invalid("unknown simulation mode '" + mode + "' (expected sweep-bin-width, sweep-interval or fdr-bias)");
    }
    if (o->grid_size > 0) require(o->grid, "grid");
    cfg.grid.assign(o->grid, o->grid + o->grid_size);
    cfg.seed = o->seed;
    cfg.threads = o->threads;
    *csv = copy_string(sweep_csv(run_sweep(cfg)));
  });
}

mm_status mm_wing_report(const mm_fit* fit, const int* orders, size_t n_orders, const char* perm_cov_path, int as_csv,
                         char** out) {
  return guard([&] {
    require(fit, "fit");
    require(out, "out");
    if (n_orders == 0) throw_invalid("at least one wing order is required");
    require(orders, "orders");
    WingReport report;
    report.centers = fit->fit.spec().centers();
    for (size_t i = 0; i < n_orders; ++i) {
      report.orders.push_back(orders[i]);
      report.wings.push_back(wing_vector(fit->fit, orders[i]));
    }
    if (perm_cov_path) {
      report.estimate = estimate_mean_correlation(read_bin_covariance(perm_cov_path), report.wings.front());
      report.has_estimate = true;
    }
    *out = copy_string(as_csv ? wing_csv(report) : wing_json(report));
  });
}

mm_status mm_quantile_transform(const char* from, const double* in, size_t count, double* out) {
  return guard([&] {
    require(from, "from");
    if (count > 0) {
      require(in, "input");
      require(out, "output");
    }
    const std::string spec(from);
    const std::size_t colon = spec.find(':');
    if (colon == std::string::npos) throw_invalid("--from expects t:<df> or f:<d1>,<d2>");
    const std::string kind = spec.substr(0, colon);
    const std::string args = spec.substr(colon + 1);
    special::Distribution dist;
    if (kind == "t") {
      dist = special::Distribution::student_t(parse_double(args, "--from"));
    } else if (kind == "f") {
      const std::size_t comma = args.find(',');
      if (comma == std::string::npos) throw_invalid("--from f: needs two degrees of freedom, e.g. f:2,20");
      dist = special::Distribution::fisher_f(parse_double(args.substr(0, comma), "--from"),
                                             parse_double(args.substr(comma + 1), "--from"));
    } else {
      throw_invalid("--from expects t:<df> or f:<d1>,<d2>");
    }
    const std::vector<double> result = quantile_transform(dist, std::span<const double>(in, count));
    std::copy(result.begin(), result.end(), out);
  });
}

mm_status mm_zeta(double lambda, double* out) {
  return guard([&] {
    require(out, "out");
    *out = zeta(lambda);
  });
}

}  // extern "C"
