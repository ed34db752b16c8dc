#ifndef FUNCRATE_H
#define FUNCRATE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum FrStatus {
  FR_STATUS_OK = 0,
  /*
   null pointer, bad UTF-8 or an out-of-range argument
   */
  FR_STATUS_INVALID_ARGUMENT = 1,
  /*
   configuration rejected; the message lists every violation
   */
  FR_STATUS_INVALID_CONFIG = 2,
  /*
   a required integral or moment is infinite
   */
  FR_STATUS_DIVERGENT = 3,
  /*
   simulation, quadrature or fitting failed
   */
  FR_STATUS_RUNTIME = 4,
  FR_STATUS_IO = 5,
  /*
   a Rust panic was caught at the boundary
   */
  FR_STATUS_PANIC = 6,
} FrStatus;

typedef enum FrAbscissaMode {
  FR_ABSCISSA_MODE_LOG_N = 0,
  FR_ABSCISSA_MODE_LOG_N_OVER_LOG = 1,
} FrAbscissaMode;

/*
 Opaque experiment configuration.
 */
typedef struct FrConfig FrConfig;

/*
 Opaque experiment report.
 */
typedef struct FrReport FrReport;

/*
 Line-fit result of [`fr_fit_rate`].
 */
typedef struct FrRateFit {
  double slope;
  double intercept;
  double r_squared;
} FrRateFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or null. Valid until the
 next call into this library from the same thread.
 */
const char *fr_last_error(void);

/*
 Library version as a static string.
 */
const char *fr_version(void);

/*
 Parses a configuration document.

 # Safety
 `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FrStatus fr_config_parse(const char *text, struct FrConfig **out);

/*
 Loads a configuration file; table paths resolve against its directory.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FrStatus fr_config_load(const char *path, struct FrConfig **out);

/*
 Overrides the replicate count.

 # Safety
 `cfg` must come from `fr_config_parse` or `fr_config_load`.
 */
enum FrStatus fr_config_set_replicates(struct FrConfig *cfg, uintptr_t replicates);

/*
 Overrides the seed.

 # Safety
 `cfg` must come from `fr_config_parse` or `fr_config_load`.
 */
enum FrStatus fr_config_set_seed(struct FrConfig *cfg, uint64_t seed);

/*
 # Safety
 `cfg` must be null or come from this library, and not be freed twice.
 */
void fr_config_free(struct FrConfig *cfg);

/*
 Runs an experiment. `threads = 0` defers to `FUNCRATE_THREADS`, then to
 all cores.

 # Safety
 `cfg` must be a live configuration handle and `out` a valid pointer.
 */
enum FrStatus fr_run(const struct FrConfig *cfg, uint32_t threads, struct FrReport **out);

/*
 # Safety
 `report` must be null or come from `fr_run`, and not be freed twice.
 */
void fr_report_free(struct FrReport *report);

/*
 Number of ladder rungs in the report.

 # Safety
 `report` must be a live report handle.
 */
enum FrStatus fr_report_rung_count(const struct FrReport *report, uintptr_t *out);

/*
 `n`, `E|J|^p` and its standard error for rung `index`.

 # Safety
 `report` must be a live report handle; output pointers must be valid.
 */
enum FrStatus fr_report_strong(const struct FrReport *report,
                               uintptr_t index,
                               uintptr_t *n,
                               double *value,
                               double *std_error);

/*
 The report as pretty-printed JSON; free with `fr_string_free`.

 # Safety
 `report` must be a live report handle and `out` a valid pointer.
 */
enum FrStatus fr_report_json(const struct FrReport *report, char **out);

/*
 The report as CSV; free with `fr_string_free`.

 # Safety
 `report` must be a live report handle and `out` a valid pointer.
 */
enum FrStatus fr_report_csv(const struct FrReport *report, char **out);

/*
 # Safety
 `s` must be null or a string returned by this library.
 */
void fr_string_free(char *s);

/*
 Density at `z` of the symmetric stable law `e^{-t|ξ|^α}`.

 # Safety
 `out` must be a valid pointer.
 */
enum FrStatus fr_stable_density(double alpha, double t, double z, double *out);

/*
 Analytic integrability verdict for a majorant and weight given in
 config syntax (`"gaussian 0.25"`, `"poly 0.5"`, ...). Writes 1 to
 `accepted` when `∫ V^p Q` is finite, 0 otherwise.

 # Safety
 String arguments must be NUL-terminated; `accepted` must be valid.
 */
enum FrStatus fr_check_integrability(const char *majorant,
                                     const char *weight,
                                     double p,
                                     double alpha,
                                     int *accepted);

/*
 Least-squares rate fit of `log error` against the chosen abscissa.

 # Safety
 `ns` and `errors` must point to `len` elements; `out` must be valid.
 */
enum FrStatus fr_fit_rate(const uintptr_t *ns,
                          const double *errors,
                          uintptr_t len,
                          enum FrAbscissaMode mode,
                          struct FrRateFit *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FUNCRATE_H */
