/* C interface to the markovpca library.
 *
 * All objects are opaque handles created by *_create / *_parse / *_load /
 * *_run functions and released with the matching *_free. Every fallible call
 * returns an mpca_status; on failure mpca_last_error() holds a message for
 * the calling thread until its next failing call.
 */
#ifndef MARKOVPCA_H_
#define MARKOVPCA_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MARKOVPCA_BUILDING)
#    define MPCA_API __declspec(dllexport)
#  else
#    define MPCA_API __declspec(dllimport)
#  endif
#else
#  define MPCA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mpca_status {
  MPCA_OK = 0,
  MPCA_ERR_INVALID_ARGUMENT = 1,
  MPCA_ERR_ERGODICITY = 2,
  MPCA_ERR_REVERSIBILITY = 3,
  MPCA_ERR_DEGENERATE_GAP = 4,
  MPCA_ERR_NUMERICAL = 5,
  MPCA_ERR_EMPTY_TRACE = 6,
  MPCA_ERR_CONFIG = 7,
  MPCA_ERR_IO = 8,
  MPCA_ERR_BUFFER_TOO_SMALL = 9,
  MPCA_ERR_INTERNAL = 10
} mpca_status;

typedef struct mpca_chain mpca_chain;
typedef struct mpca_states mpca_states;
typedef struct mpca_config mpca_config;
typedef struct mpca_results mpca_results;
typedef struct mpca_report mpca_report;

MPCA_API const char* mpca_version(void);
MPCA_API const char* mpca_status_string(mpca_status status);
MPCA_API const char* mpca_last_error(void);

/* ---- Markov chains ---------------------------------------------------- */

/* probs is row-major n_states x n_states. Spectral analysis runs at creation,
 * so non-ergodic chains fail here with MPCA_ERR_ERGODICITY. */
MPCA_API mpca_status mpca_chain_create(const double* probs, int n_states,
                                       mpca_chain** out);
MPCA_API mpca_status mpca_chain_create_rho(int n_states, double rho,
                                           mpca_chain** out);
MPCA_API void mpca_chain_free(mpca_chain* chain);

MPCA_API int mpca_chain_states(const mpca_chain* chain);
MPCA_API mpca_status mpca_chain_stationary(const mpca_chain* chain,
                                           double* out, size_t len);
MPCA_API mpca_status mpca_chain_lambda2(const mpca_chain* chain, double* out);
MPCA_API mpca_status mpca_chain_is_reversible(const mpca_chain* chain,
                                              int* out);
MPCA_API mpca_status mpca_chain_d_mix(const mpca_chain* chain, uint64_t t,
                                      double* out);
MPCA_API mpca_status mpca_chain_tau_mix(const mpca_chain* chain, double eps,
                                        uint64_t* out);
MPCA_API mpca_status mpca_chain_sample_path(const mpca_chain* chain,
                                            uint64_t seed, int* out,
                                            size_t len);

/* ---- State distributions --------------------------------------------- */

/* noise is "bernoulli" or "uniform". */
MPCA_API mpca_status mpca_states_create_paper(int n_states, int dim,
                                              double sigma_beta,
                                              const char* noise, uint64_t seed,
                                              mpca_states** out);
MPCA_API void mpca_states_free(mpca_states* states);
MPCA_API int mpca_states_dim(const mpca_states* states);
MPCA_API double mpca_states_bernoulli_p(const mpca_states* states);
/* Eigenvalues (descending) of sum_s pi(s) Sigma_s; out needs dim entries. */
MPCA_API mpca_status mpca_states_total_eigenvalues(const mpca_states* states,
                                                   const mpca_chain* chain,
                                                   double* out, size_t len);

/* ---- Experiments ------------------------------------------------------ */

MPCA_API mpca_status mpca_config_parse(const char* text, mpca_config** out);
MPCA_API mpca_status mpca_config_load(const char* path, mpca_config** out);
MPCA_API void mpca_config_free(mpca_config* config);
/* "rho", "sigma_beta" or "" when nothing is swept. */
MPCA_API const char* mpca_config_sweep_field(const mpca_config* config);
/* Number of result tables: the sweep length, or 1. */
MPCA_API size_t mpca_config_sweep_size(const mpca_config* config);
MPCA_API mpca_status mpca_config_sweep_value(const mpca_config* config,
                                             size_t index, double* out);

MPCA_API mpca_status mpca_experiment_run(const mpca_config* config,
                                         size_t sweep_index,
                                         mpca_results** out);
MPCA_API mpca_status mpca_results_read_csv(const char* path,
                                           mpca_results** out);
MPCA_API void mpca_results_free(mpca_results* results);
MPCA_API size_t mpca_results_rows(const mpca_results* results);
/* algorithm points into the results object and lives as long as it. */
MPCA_API mpca_status mpca_results_row(const mpca_results* results, size_t i,
                                      size_t* trial_id, const char** algorithm,
                                      size_t* checkpoint_n, double* sin2_error,
                                      uint64_t* seed);
/* format: "csv", "svg", "summary" or "metadata". */
MPCA_API mpca_status mpca_results_write(const mpca_results* results,
                                        const char* format, const char* path);

/* ---- Oracle suites ---------------------------------------------------- */

/* suite: qnorm, covdecay, prodapprox, revmix, mixing or all. A completed run
 * returns MPCA_OK even when violations were found; inspect the report. */
MPCA_API mpca_status mpca_verify(const char* suite, uint64_t seed,
                                 mpca_report** out);
MPCA_API void mpca_report_free(mpca_report* report);
MPCA_API size_t mpca_report_checks(const mpca_report* report);
MPCA_API size_t mpca_report_violations(const mpca_report* report);
MPCA_API double mpca_report_worst_ratio(const mpca_report* report);
/* Tab-separated violation lines: suite, instance, where, lhs, rhs. */
MPCA_API const char* mpca_report_text(const mpca_report* report);

#ifdef __cplusplus
}
#endif

#endif /* MARKOVPCA_H_ */
