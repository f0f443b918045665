#ifndef EPI_LAB_H
#define EPI_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EpiFormat {
  EPI_FORMAT_JSON = 0,
  EPI_FORMAT_CSV = 1,
} EpiFormat;

typedef enum EpiStatus {
  EPI_STATUS_OK = 0,
  EPI_STATUS_NULL_POINTER = 1,
  EPI_STATUS_INVALID_ARGUMENT = 2,
  EPI_STATUS_NUMERICAL = 3,
  EPI_STATUS_CONFIG = 4,
  EPI_STATUS_UTF8 = 5,
  EPI_STATUS_PANIC = 6,
} EpiStatus;

typedef enum EpiVerdict {
  EPI_VERDICT_HOLDS = 0,
  EPI_VERDICT_EQUALITY = 1,
  EPI_VERDICT_VIOLATED_WITHIN_ERR = 2,
  EPI_VERDICT_VIOLATED = 3,
} EpiVerdict;

/**
 * A univariate distribution.
 */
typedef struct EpiDistribution EpiDistribution;

/**
 * The result of running an experiment config.
 */
typedef struct EpiRun EpiRun;

/**
 * One inequality row. For multi-step checks this is the first row whose
 * verdict equals the overall verdict.
 */
typedef struct EpiReport {
  double lhs;
  double rhs;
  double gap;
  double err;
  double tol;
  enum EpiVerdict verdict;
} EpiReport;

typedef struct EpiSummary {
  size_t cells;
  size_t holds;
  size_t equality;
  size_t violated_within_err;
  size_t violated;
  size_t errors;
} EpiSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *epi_last_error_message(void);

void epi_clear_error(void);

/**
 * Library version as a static string.
 */
const char *epi_version(void);

enum EpiStatus epi_distribution_gaussian(double variance, struct EpiDistribution **dst);

enum EpiStatus epi_distribution_laplace(double scale, struct EpiDistribution **dst);

enum EpiStatus epi_distribution_logistic(double scale, struct EpiDistribution **dst);

/**
 * Gaussian mixture with `n` components.
 */
enum EpiStatus epi_distribution_mixture(const double *weights,
                                        const double *means,
                                        const double *sds,
                                        size_t n,
                                        struct EpiDistribution **dst);

/**
 * Parses a JSON spec such as `{"family": "laplace", "scale": 1}`.
 */
enum EpiStatus epi_distribution_from_json(const char *json, struct EpiDistribution **dst);

void epi_distribution_free(struct EpiDistribution *d);

enum EpiStatus epi_distribution_pdf(const struct EpiDistribution *d, double x, double *value);

enum EpiStatus epi_distribution_quantile(const struct EpiDistribution *d, double u, double *value);

/**
 * Differential entropy in nats with its error estimate.
 */
enum EpiStatus epi_entropy(const struct EpiDistribution *d, double *nats, double *err);

enum EpiStatus epi_entropy_power(const struct EpiDistribution *d, double *value);

/**
 * Runs a two-distribution check by name. `lambda` is ignored by
 * `epi_shannon`.
 */
enum EpiStatus epi_check_pair(const char *check,
                              const struct EpiDistribution *x,
                              const struct EpiDistribution *y,
                              double lambda,
                              double tol_scale,
                              struct EpiReport *report);

/**
 * Full report of a two-distribution check as JSON; release with
 * [`epi_string_free`].
 */
enum EpiStatus epi_check_pair_json(const char *check,
                                   const struct EpiDistribution *x,
                                   const struct EpiDistribution *y,
                                   double lambda,
                                   double tol_scale,
                                   char **json);

/**
 * Runs an experiment config given as TOML text. `workers == 0` uses the
 * default pool.
 */
enum EpiStatus epi_run_config(const char *toml,
                              double tol_scale,
                              size_t workers,
                              struct EpiRun **dst);

enum EpiStatus epi_run_summary(const struct EpiRun *run, struct EpiSummary *summary);

/**
 * The exit status the command-line tool would report, or -1 for a null run.
 */
int32_t epi_run_exit_code(const struct EpiRun *run);

/**
 * Renders the run as JSON or CSV; release with [`epi_string_free`].
 */
enum EpiStatus epi_run_render(const struct EpiRun *run, enum EpiFormat format, char **rendered);

void epi_run_free(struct EpiRun *run);

void epi_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EPI_LAB_H */
