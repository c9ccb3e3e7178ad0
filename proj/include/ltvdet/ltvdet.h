/* ltvdet: detectability analysis for linear time-varying systems
 *
 * C API over the core library. All functions are thread-compatible; the
 * last-error string is thread-local. Handles are opaque and must be released
 * with the matching _free call. All JSON in and out is UTF-8.
 */
#ifndef LTVDET_H
#define LTVDET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ltvdet_status {
  LTVDET_OK = 0,
  LTVDET_ERR_INVALID_ARGUMENT = 1, /* bad handle, null pointer, bad option value */
  LTVDET_ERR_PARSE = 2,            /* malformed system file or options JSON */
  LTVDET_ERR_DIMENSION = 3,        /* inconsistent matrix dimensions */
  LTVDET_ERR_DOMAIN = 4,           /* evaluation outside a coefficient's domain */
  LTVDET_ERR_NUMERIC = 5,          /* overflow, stiffness, conditioning, divergence */
  LTVDET_ERR_IO = 6,               /* file read/write failure */
  LTVDET_ERR_INTERNAL = 7
} ltvdet_status;

typedef struct ltvdet_system ltvdet_system;
typedef struct ltvdet_result ltvdet_result;

/* Library version, e.g. "0.1.0". Static storage, do not free. */
const char* ltvdet_version(void);

/* Message for the most recent failing call on this thread. Empty string if
 * none. Static thread-local storage, valid until the next failing call. */
const char* ltvdet_last_error(void);

/* --- systems ------------------------------------------------------------ */

/* Parse a system definition from JSON text (see docs/system-format.md). */
ltvdet_status ltvdet_system_from_json(const char* json_text, ltvdet_system** out);

/* Read and parse a system definition file. */
ltvdet_status ltvdet_system_from_file(const char* path, ltvdet_system** out);

void ltvdet_system_free(ltvdet_system* sys);

int ltvdet_system_state_dim(const ltvdet_system* sys);  /* n, or -1 on bad handle */
int ltvdet_system_output_dim(const ltvdet_system* sys); /* p, or -1 on bad handle */

/* Evaluate A(t) into a (row-major, n*n) and C(t) into c (row-major, p*n).
 * Either destination may be NULL to skip it. */
ltvdet_status ltvdet_system_eval(const ltvdet_system* sys, double t,
                                 double* a, double* c);

/* --- bundled example systems -------------------------------------------- */

int ltvdet_example_count(void);
const char* ltvdet_example_name(int index);       /* NULL if out of range */
const char* ltvdet_example_json(const char* name); /* NULL if unknown */

/* --- analyses ------------------------------------------------------------ */

/* Run one operation on a system. op is one of:
 *   "qr" | "dichotomy" | "gramian" | "reduce" | "observe" | "analyze"
 * options_json configures the run ("{}" for defaults); unknown keys are
 * rejected. On success *out holds a report plus any curve tables. */
ltvdet_status ltvdet_run(const ltvdet_system* sys, const char* op,
                         const char* options_json, ltvdet_result** out);

void ltvdet_result_free(ltvdet_result* res);

/* Full JSON report. Owned by the result handle. */
const char* ltvdet_result_report_json(const ltvdet_result* res);

/* Curve tables produced by the run (time series for plotting). */
int ltvdet_result_curve_count(const ltvdet_result* res);
const char* ltvdet_result_curve_name(const ltvdet_result* res, int index);
const char* ltvdet_result_curve_csv(const ltvdet_result* res, int index);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LTVDET_H */
