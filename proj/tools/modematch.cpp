// modematch command-line tool. Talks to the library only through modematch.h.

#include <cstdio>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "modematch/modematch.h"

namespace {

struct Failure {
  int code;
  std::string message;
};

void check(mm_status status) {
  if (status != MM_OK) throw Failure{static_cast<int>(status), mm_last_error()};
}

void usage_error(const std::string& message) { throw Failure{MM_ERR_USAGE, message}; }

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') usage_error(std::string(flag) + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// lo:hi:step, inclusive of hi up to rounding.
std::vector<double> parse_range(const std::string& text) {
  const std::vector<double> parts = parse_list([&] {
    std::string s = text;
    for (char& c : s) {
      if (c == ':') c = ',';
    }
    return s;
  }(), "--grid-range");
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) usage_error("--grid-range expects lo:hi:step");
  std::vector<double> out;
  const long n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[2]);
  return out;
}

class Statistics {
 public:
  Statistics(const std::string& path, const std::string& column) {
    check(mm_read_statistics(path.c_str(), column.empty() ? nullptr : column.c_str(), &data_, &size_));
  }
  ~Statistics() { mm_free_doubles(data_); }
  Statistics(const Statistics&) = delete;
  Statistics& operator=(const Statistics&) = delete;
  const double* data() const { return data_; }
  size_t size() const { return size_; }

 private:
  double* data_ = nullptr;
  size_t size_ = 0;
};

class Fit {
 public:
  explicit Fit(mm_fit* f) : fit_(f) {}
  ~Fit() { mm_fit_destroy(fit_); }
  Fit(const Fit&) = delete;
  Fit& operator=(const Fit&) = delete;
  const mm_fit* get() const { return fit_; }

 private:
  mm_fit* fit_;
};

Fit load_fit(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{MM_ERR_DATA, "cannot open fit artifact '" + path + "'"};
  std::stringstream ss;
  ss << in.rdbuf();
  mm_fit* f = nullptr;
  check(mm_fit_from_json(ss.str().c_str(), &f));
  return Fit(f);
}

void emit(char* text, const std::string& path) {
  const std::string s(text);
  mm_free_string(text);
  if (path.empty() || path == "-") {
    std::fwrite(s.data(), 1, s.size(), stdout);
    std::fflush(stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << s;
  if (!out) throw Failure{MM_ERR_DATA, "cannot write '" + path + "'"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empirical null fitting by mode matching, with fdr, bias and correlation diagnostics."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mm_version()));

  // fit
  std::string fit_input, fit_column, fit_family = "normal", fit_interval, fit_perm, fit_output = "-";
  std::vector<std::string> fit_fixed;
  double fit_width = 0.0, fit_origin = 0.0;
  int fit_bins = 0, fit_boot = 0, fit_threads = 0;
  std::uint64_t fit_seed = 1;
  auto* fit = app.add_subcommand("fit", "Fit the empirical null and write a JSON fit artifact.");
  fit->add_option("-i,--input", fit_input, "Statistics file (one per line, # comments) or CSV with --csv-column")
      ->required();
  fit->add_option("--csv-column", fit_column, "Read the named column of a CSV file");
  fit->add_option("--family", fit_family,
                  "Null family: normal, normal:mean, normal:var, chisq, chisq:scale, chisq:df, p0only")
      ->capture_default_str();
  fit->add_option("--fix-params", fit_fixed,
                  "Fixed parameter(s) key=value for subfamilies and p0only (mean, var, scale, df)")
      ->delimiter(',');
  fit->add_option("--bin-width", fit_width, "Histogram bin width (default: 0.1 x robust scale)");
  auto* origin_opt = fit->add_option("--origin", fit_origin, "Left edge of the first bin");
  fit->add_option("--num-bins", fit_bins, "Number of bins (default: cover the data)");
  fit->add_option("--fit-interval", fit_interval,
                  "Fitting interval lo,hi; snapped outward to bin edges. Use --fit-interval=lo,hi for negative lo");
  fit->add_option("--perm-cov", fit_perm,
                  "Permutation replicate histograms (CSV rows of counts) or a K x K matrix file headed 'matrix'");
  fit->add_option("--bootstrap", fit_boot, "Bootstrap replicate count for resampling SEs")->check(CLI::NonNegativeNumber);
  fit->add_option("--seed", fit_seed, "Random seed")->capture_default_str();
  fit->add_option("--threads", fit_threads, "Worker threads (0 = all cores)");
  fit->add_option("-o,--output", fit_output, "Output path ('-' for stdout)")->capture_default_str();

  // fdr
  std::string fdr_fit, fdr_input, fdr_column, fdr_perm, fdr_output = "-";
  bool fdr_zeta = false, fdr_cap = false;
  auto* fdr = app.add_subcommand("fdr", "Local and tail fdr curves with confidence bands, as CSV.");
  fdr->add_option("--fit", fdr_fit, "Fit artifact from 'fit'")->required();
  fdr->add_option("-i,--input", fdr_input, "The statistics the fit was built from")->required();
  fdr->add_option("--csv-column", fdr_column, "Read the named column of a CSV file");
  fdr->add_option("--perm-cov", fdr_perm, "Bin-count covariance source for the bands (default: multinomial)");
  fdr->add_flag("--adjust-zeta", fdr_zeta, "Add zeta_null, fdr_adjusted and below_null columns");
  fdr->add_flag("--cap", fdr_cap, "Cap printed fdr values at 1 (presentation only)");
  fdr->add_option("-o,--output", fdr_output, "Output path ('-' for stdout)")->capture_default_str();

  // bias
  std::string bias_scenario = "normal", bias_output = "-";
  double bias_p0 = 0.9, bias_width = 0.1, bias_t0 = 0.0;
  auto* bias = app.add_subcommand("bias", "Large-sample bias of the fit under a simulation scenario, as CSV.");
  bias->add_option("--scenario", bias_scenario,
                   "normal: N(0.2,1.2^2) null, N(3,1.2^2) alternative; chisq: 0.8 chi2(3) null, noncentral chi2(3,3)")
      ->capture_default_str();
  bias->add_option("--p0", bias_p0, "Null proportion")->capture_default_str();
  bias->add_option("--bin-width", bias_width, "Bin width")->capture_default_str();
  bias->add_option("--t0", bias_t0, "Fitting interval half-width (normal) or upper end (chisq); default 1 or 4");
  bias->add_option("-o,--output", bias_output, "Output path ('-' for stdout)")->capture_default_str();

  // simulate
  std::string sim_scenario = "normal", sim_mode = "sweep-interval", sim_grid, sim_range, sim_output = "-";
  double sim_p0 = 1.0, sim_width = 0.1, sim_t0 = 0.0;
  int sim_n = 10000, sim_reps = 100, sim_threads = 0;
  bool sim_empirical = false;
  std::uint64_t sim_seed = 1;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo tuning sweeps and fdr bias experiments, as CSV.");
  sim->add_option("--scenario", sim_scenario, "normal or chisq (see 'bias --help')")->capture_default_str();
  sim->add_option("--mode", sim_mode, "sweep-bin-width, sweep-interval or fdr-bias")->capture_default_str();
  sim->add_option("--p0", sim_p0, "Null proportion")->capture_default_str();
  sim->add_option("--n", sim_n, "Statistics per replicate")->capture_default_str();
  sim->add_option("--reps", sim_reps, "Replicates")->capture_default_str();
  sim->add_option("--grid", sim_grid, "Comma-separated sweep values");
  sim->add_option("--grid-range", sim_range, "Sweep values as lo:hi:step");
  sim->add_option("--bin-width", sim_width, "Bin width when it is not swept")->capture_default_str();
  sim->add_option("--t0", sim_t0, "Fitting interval parameter when it is not swept; default 1 or 4");
  sim->add_flag("--empirical-null", sim_empirical, "fdr-bias: refit the null in every replicate");
  sim->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  sim->add_option("--threads", sim_threads, "Worker threads (0 = all cores)");
  sim->add_option("-o,--output", sim_output, "Output path ('-' for stdout)")->capture_default_str();

  // wing
  std::string wing_fit, wing_orders = "1,2", wing_perm, wing_format = "json", wing_output = "-";
  auto* wing = app.add_subcommand("wing", "Wing vectors of a fit and the rank-one correlation estimate.");
  wing->add_option("--fit", wing_fit, "Fit artifact from 'fit'")->required();
  wing->add_option("--orders", wing_orders, "Polynomial orders; the first is compared with the permutation covariance")
      ->capture_default_str();
  wing->add_option("--perm-cov", wing_perm, "Permutation replicate histograms or a 'matrix' file");
  wing->add_option("--format", wing_format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  wing->add_option("-o,--output", wing_output, "Output path ('-' for stdout)")->capture_default_str();

  // transform
  std::string tr_from, tr_input, tr_column, tr_output = "-";
  auto* tr = app.add_subcommand("transform", "Quantile-transform t statistics to N(0,1) or F statistics to chi2(d1).");
  tr->add_option("--from", tr_from, "Theoretical null: t:<df> or f:<d1>,<d2>")->required();
  tr->add_option("-i,--input", tr_input, "Statistics file")->required();
  tr->add_option("--csv-column", tr_column, "Read the named column of a CSV file");
  tr->add_option("-o,--output", tr_output, "Output path ('-' for stdout)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : MM_ERR_USAGE;
  }

  try {
    if (*fit) {
      Statistics stats(fit_input, fit_column);
      mm_fit_options o;
      mm_fit_options_init(&o);
      std::string fixed;
      for (const auto& f : fit_fixed) fixed += (fixed.empty() ? "" : ",") + f;
      o.family = fit_family.c_str();
      o.fixed_params = fixed.empty() ? nullptr : fixed.c_str();
      o.bin_width = fit_width;
      o.has_origin = origin_opt->count() > 0;
      o.origin = fit_origin;
      o.num_bins = fit_bins;
      if (!fit_interval.empty()) {
        const std::vector<double> iv = parse_list(fit_interval, "--fit-interval");
        if (iv.size() != 2) usage_error("--fit-interval expects lo,hi");
        o.has_interval = 1;
        o.interval_lo = iv[0];
        o.interval_hi = iv[1];
      }
      o.perm_cov_path = fit_perm.empty() ? nullptr : fit_perm.c_str();
      o.bootstrap = fit_boot;
      o.seed = fit_seed;
      o.threads = fit_threads;
      mm_fit* raw = nullptr;
      check(mm_fit_create(stats.data(), stats.size(), &o, &raw));
      Fit f(raw);
      char* json = nullptr;
      check(mm_fit_to_json(f.get(), &json));
      emit(json, fit_output);
    } else if (*fdr) {
      Fit f = load_fit(fdr_fit);
      Statistics stats(fdr_input, fdr_column);
      char* csv = nullptr;
      check(mm_fdr_csv(f.get(), stats.data(), stats.size(), fdr_perm.empty() ? nullptr : fdr_perm.c_str(), fdr_zeta,
                       fdr_cap, &csv));
      emit(csv, fdr_output);
    } else if (*bias) {
      const double t0 = bias_t0 > 0.0 ? bias_t0 : (bias_scenario == "chisq" ? 4.0 : 1.0);
      char* csv = nullptr;
      check(mm_bias_csv(bias_scenario.c_str(), bias_p0, bias_width, t0, &csv));
      emit(csv, bias_output);
    } else if (*sim) {
      std::vector<double> grid;
      if (!sim_grid.empty() && !sim_range.empty()) usage_error("use either --grid or --grid-range");
      if (!sim_grid.empty()) grid = parse_list(sim_grid, "--grid");
      if (!sim_range.empty()) grid = parse_range(sim_range);
      mm_simulate_options o;
      mm_simulate_options_init(&o);
      o.scenario = sim_scenario.c_str();
      o.mode = sim_mode.c_str();
      o.p0 = sim_p0;
      o.n = sim_n;
      o.reps = sim_reps;
      o.grid = grid.data();
      o.grid_size = grid.size();
      o.bin_width = sim_width;
      o.t0 = sim_t0 > 0.0 ? sim_t0 : (sim_scenario == "chisq" ? 4.0 : 1.0);
      o.empirical_null = sim_empirical;
      o.seed = sim_seed;
      o.threads = sim_threads;
      char* csv = nullptr;
      check(mm_simulate_csv(&o, &csv));
      emit(csv, sim_output);
    } else if (*wing) {
      Fit f = load_fit(wing_fit);
      std::vector<int> orders;
      for (double v : parse_list(wing_orders, "--orders")) {
        if (v != static_cast<int>(v)) usage_error("--orders must be integers");
        orders.push_back(static_cast<int>(v));
      }
      char* out = nullptr;
      check(mm_wing_report(f.get(), orders.data(), orders.size(), wing_perm.empty() ? nullptr : wing_perm.c_str(),
                           wing_format == "csv", &out));
      emit(out, wing_output);
    } else if (*tr) {
      Statistics stats(tr_input, tr_column);
      std::vector<double> out(stats.size());
      check(mm_quantile_transform(tr_from.c_str(), stats.data(), stats.size(), out.data()));
      std::string text;
      char buf[40];
      for (double v : out) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        text += buf;
      }
      char* copy = static_cast<char*>(std::malloc(text.size() + 1));
      std::memcpy(copy, text.c_str(), text.size() + 1);
      emit(copy, tr_output);
    }
  } catch (const Failure& f) {
    std::cerr << "modematch: " << f.message << "\n";
    return f.code;
  }
  return 0;
}
