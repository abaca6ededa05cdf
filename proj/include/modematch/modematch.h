/* C interface to the modematch library.
 *
 * Every call returns an mm_status; on failure mm_last_error() holds a message
 * for the calling thread. Strings and arrays handed out by the library are
 * released with mm_free_string / mm_free_doubles. */
#ifndef MODEMATCH_H
#define MODEMATCH_H

#include <stddef.h>
#include <stdint.h>

#if defined(MODEMATCH_BUILDING_LIBRARY)
#define MM_API __attribute__((visibility("default")))
#else
#define MM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mm_status {
  MM_OK = 0,
  MM_ERR_USAGE = 1,     /* invalid argument or option */
  MM_ERR_DATA = 2,      /* unreadable or malformed input */
  MM_ERR_NUMERICAL = 3  /* fit or decomposition failed */
} mm_status;

typedef struct mm_fit mm_fit;

typedef struct mm_fit_options {
  const char* family;        /* normal, normal:mean, normal:var, chisq, chisq:scale, chisq:df, p0only */
  const char* fixed_params;  /* "key=value,..." with keys mean, var, scale, df; may be NULL */
  double bin_width;          /* <= 0 selects the default */
  int has_origin;
  double origin;
  int num_bins;              /* <= 0 selects the default */
  int has_interval;
  double interval_lo;
  double interval_hi;
  const char* perm_cov_path; /* replicate histograms or "matrix" file; may be NULL */
  int bootstrap;             /* replicate count, 0 for none */
  uint64_t seed;
  int threads;               /* 0 = all cores */
} mm_fit_options;

typedef struct mm_simulate_options {
  const char* scenario;  /* normal or chisq */
  const char* mode;      /* sweep-bin-width, sweep-interval, fdr-bias */
  double p0;
  int n;                 /* statistics per replicate */
  int reps;
  const double* grid;    /* sweep values, strictly increasing */
  size_t grid_size;
  double bin_width;      /* fixed Delta (interval sweep, fdr-bias) */
  double t0;             /* fixed t0 (bin-width sweep, fdr-bias) */
  int empirical_null;    /* fdr-bias: refit the null per replicate */
  uint64_t seed;
  int threads;
} mm_simulate_options;

MM_API const char* mm_version(void);
MM_API const char* mm_last_error(void);
MM_API void mm_free_string(char* s);
MM_API void mm_free_doubles(double* p);

MM_API void mm_fit_options_init(mm_fit_options* options);
MM_API void mm_simulate_options_init(mm_simulate_options* options);

/* csv_column NULL reads one number per line. */
MM_API mm_status mm_read_statistics(const char* path, const char* csv_column, double** values, size_t* count);

MM_API mm_status mm_fit_create(const double* statistics, size_t count, const mm_fit_options* options, mm_fit** fit);
MM_API void mm_fit_destroy(mm_fit* fit);

MM_API mm_status mm_fit_to_json(const mm_fit* fit, char** json);
MM_API mm_status mm_fit_from_json(const char* json, mm_fit** fit);

/* Length of (log p0, theta). */
MM_API int mm_fit_num_params(const mm_fit* fit);
MM_API mm_status mm_fit_theta(const mm_fit* fit, double* out, size_t size);
/* Delta-method standard errors from the multinomial covariance. */
MM_API mm_status mm_fit_theta_se(const mm_fit* fit, double* out, size_t size);
MM_API double mm_fit_overdispersion(const mm_fit* fit);

/* Curves for the fit. The statistics must be the ones the fit was built from. */
MM_API mm_status mm_fdr_csv(const mm_fit* fit, const double* statistics, size_t count, const char* perm_cov_path,
                            int adjust_zeta, int cap_at_one, char** csv);

/* scenario: normal or chisq. */
MM_API mm_status mm_bias_csv(const char* scenario, double p0, double bin_width, double t0, char** csv);

MM_API mm_status mm_simulate_csv(const mm_simulate_options* options, char** csv);

/* Wing vectors of the given orders; with perm_cov_path also the top eigenpairs
 * and the mean-correlation estimate. as_csv selects CSV instead of JSON. */
MM_API mm_status mm_wing_report(const mm_fit* fit, const int* orders, size_t n_orders, const char* perm_cov_path,
                                int as_csv, char** out);

/* from: "t:<df>" maps to N(0,1), "f:<d1>,<d2>" maps to chi-square(d1). */
MM_API mm_status mm_quantile_transform(const char* from, const double* in, size_t count, double* out);

MM_API mm_status mm_zeta(double lambda, double* out);

#ifdef __cplusplus
}
#endif

#endif
