#ifndef IPFSEL_IPFSEL_H
#define IPFSEL_IPFSEL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(IPFSEL_BUILDING_LIBRARY)
#    define IPFSEL_API __declspec(dllexport)
#  else
#    define IPFSEL_API __declspec(dllimport)
#  endif
#else
#  define IPFSEL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ipfsel_status {
    IPFSEL_OK = 0,
    IPFSEL_INVALID_INPUT = 1,
    IPFSEL_RUNTIME = 2,
    IPFSEL_REGION = 3,         /* threshold outside a bound's valid region */
    IPFSEL_TUNING_FAILED = 4,
    IPFSEL_IO = 5              /* output could not be written */
} ipfsel_status;

typedef enum ipfsel_family { IPFSEL_LINEAR = 0, IPFSEL_LOGISTIC = 1 } ipfsel_family;
typedef enum ipfsel_bound { IPFSEL_BOUND_MB = 0, IPFSEL_BOUND_RCONCAVE = 1 } ipfsel_bound;

typedef struct ipfsel_dataset ipfsel_dataset;
typedef struct ipfsel_fit ipfsel_fit;

IPFSEL_API const char* ipfsel_version(void);

/* Message of the last failing call on this thread; "" after success. */
IPFSEL_API const char* ipfsel_last_error(void);

/* Datasets. `x` is n*p column-major; modality sizes sum to p. */
IPFSEL_API ipfsel_status ipfsel_dataset_create(const double* y, const double* x, size_t n, size_t p,
                                               const size_t* modality_sizes, size_t modalities,
                                               ipfsel_dataset** out);
IPFSEL_API ipfsel_status ipfsel_dataset_load(const char* csv_path, const char* schema_path,
                                             ipfsel_dataset** out, size_t* rows_dropped);
IPFSEL_API ipfsel_status ipfsel_dataset_simulate(const char* design, const char* setting, size_t n,
                                                 uint64_t seed, ipfsel_dataset** out);
IPFSEL_API void ipfsel_dataset_free(ipfsel_dataset* data);
IPFSEL_API ipfsel_status ipfsel_dataset_shape(const ipfsel_dataset* data, size_t* n, size_t* p,
                                              size_t* modalities);
/* Borrowed pointer, valid while `data` lives. NULL if out of range. */
IPFSEL_API const char* ipfsel_dataset_feature_name(const ipfsel_dataset* data, size_t j);
/* Active columns of a simulated dataset; writes up to `capacity` indices. */
IPFSEL_API ipfsel_status ipfsel_dataset_truth(const ipfsel_dataset* data, size_t* indices, size_t capacity,
                                              size_t* count);

/* Penalized fits. `factors` has one entry per modality (NULL = all ones). */
IPFSEL_API ipfsel_status ipfsel_lambda_max(const ipfsel_dataset* data, ipfsel_family family,
                                           const double* factors, double alpha, double* out);
IPFSEL_API ipfsel_status ipfsel_fit_create(const ipfsel_dataset* data, ipfsel_family family,
                                           const double* factors, double alpha, double lambda,
                                           ipfsel_fit** out);
IPFSEL_API void ipfsel_fit_free(ipfsel_fit* fit);
/* `beta` must hold p values. */
IPFSEL_API ipfsel_status ipfsel_fit_coefficients(const ipfsel_fit* fit, double* intercept, double* beta,
                                                 size_t p);
IPFSEL_API int ipfsel_fit_converged(const ipfsel_fit* fit);
/* Rows of `x` (n*p column-major); logistic fits return probabilities. */
IPFSEL_API ipfsel_status ipfsel_fit_predict(const ipfsel_fit* fit, const double* x, size_t n, size_t p,
                                            double* out);

/* Stability-selection bounds. fp_bound returns E[V]/p. */
IPFSEL_API ipfsel_status ipfsel_fp_bound(double theta, double tau, int pairs, ipfsel_bound method,
                                         double* out);
IPFSEL_API ipfsel_status ipfsel_optimal_threshold(double q_avg, long p, int pairs, double v_target,
                                                  ipfsel_bound method, double* tau, double* bound_ev,
                                                  int* achieved);

/* File-level workflows. */
IPFSEL_API ipfsel_status ipfsel_simulate(const char* design, const char* setting, size_t n, uint64_t seed,
                                         const char* csv_path, const char* truth_path);

typedef void (*ipfsel_progress_fn)(long done, long total, const char* message, void* user);

/* `config_path` may be NULL for the defaults. reps/jobs <= 0 keep the
   config value. `summary_path` may be NULL. */
IPFSEL_API ipfsel_status ipfsel_bench(const char* config_path, int reps, uint64_t seed, int jobs,
                                      const char* results_path, const char* summary_path,
                                      ipfsel_progress_fn progress, void* user);

typedef struct ipfsel_analyze_options {
    const char* selector;   /* "lasso" or "ipf" */
    const char* threshold;  /* "0.70", "0.80", any value in (0,1], or "optimal" */
    double v_target;
    double alpha;
    int pairs;
    int k_folds;
    int cv_repeats;
    ipfsel_bound method;
    uint64_t seed;
    int jobs;
    double lambda;          /* stabsel only: > 0 skips tuning */
    const double* factors;  /* stabsel only, with lambda */
    size_t factor_count;    /* entries in `factors`, one per modality */
} ipfsel_analyze_options;

IPFSEL_API void ipfsel_analyze_options_init(ipfsel_analyze_options* opts);

IPFSEL_API ipfsel_status ipfsel_analyze(const char* csv_path, const char* schema_path,
                                        const ipfsel_analyze_options* opts, const char* report_path);
IPFSEL_API ipfsel_status ipfsel_stabsel(const char* csv_path, const char* schema_path,
                                        const ipfsel_analyze_options* opts, const char* out_path);

#ifdef __cplusplus
}
#endif

#endif
