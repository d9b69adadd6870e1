#ifndef HARDYWEAVE_H
#define HARDYWEAVE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum HwStatus {
  /**
   * Success.
   */
  HwStatusOk = 0,
  /**
   * Bad arguments: NULL pointers, invalid UTF-8, unparseable input,
   * or parameters outside the supported regime.
   */
  HwStatusInvalidArgument = 1,
  /**
   * The configuration is valid but the physics gate failed: the pair
   * cancellation left a residual, or post-selection selected nothing.
   */
  HwStatusPhysicsGate = 2,
  /**
   * Unexpected internal failure.
   */
  HwStatusInternal = 3,
} HwStatus;

/**
 * Opaque result of a pipeline run.
 */
typedef struct HwHardyReport HwHardyReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Runs the canonical pipeline. On `HW_STATUS_OK`, `*out_report` owns a
 * report that must be released with `hw_report_free`.
 *
 * # Safety
 * `out_report` must be NULL or valid for writing one pointer.
 */
enum HwStatus hw_hardy_run(double alpha_re,
                           double alpha_im,
                           double beta_re,
                           double beta_im,
                           double gamma_re,
                           double gamma_im,
                           double q_re,
                           double q_im,
                           uint8_t pump_n_max,
                           struct HwHardyReport **out_report);

/**
 * Copies the four coincidence probabilities into `out[0..4]` in the
 * order cc, cd, dc, dd.
 *
 * # Safety
 * `report` must be NULL or a live handle from `hw_hardy_run`; `out` must be NULL or valid for writing four `double`s.
 */
enum HwStatus hw_report_probabilities(const struct HwHardyReport *report,
                                      double *out);

/**
 * Copies the two residuals into `out[0..2]`: the cancellation-condition
 * relative residual, then the measured surviving-pair residual.
 *
 * # Safety
 * `report` must be NULL or a live handle from `hw_hardy_run`; `out` must be NULL or valid for writing two `double`s.
 */
enum HwStatus hw_report_residuals(const struct HwHardyReport *report,
                                  double *out);

/**
 * Returns 1 when the paradox verdict holds, 0 when it does not, and -1
 * for a NULL report.
 *
 * # Safety
 * `report` must be NULL or a live handle from `hw_hardy_run`.
 */
int32_t hw_report_verdict(const struct HwHardyReport *report);

/**
 * Serializes the full report (schema_version "1") into an owned
 * NUL-terminated string; release with `hw_string_free`.
 *
 * # Safety
 * `report` must be NULL or a live handle from `hw_hardy_run`.
 */
char *hw_report_json(const struct HwHardyReport *report);

/**
 * Human-readable rendering of the report; release with `hw_string_free`.
 *
 * # Safety
 * `report` must be NULL or a live handle from `hw_hardy_run`.
 */
char *hw_report_text(const struct HwHardyReport *report);

/**
 * Parses, compiles, and runs a circuit program; on `HW_STATUS_OK`
 * writes an owned JSON string into `*out_json` (release with
 * `hw_string_free`).
 *
 * # Safety
 * `source` must be NULL or a NUL-terminated string; `out_json` must be NULL or valid for writing one pointer.
 */
enum HwStatus hw_run_circuit_json(const char *source,
                                  uint8_t pump_n_max,
                                  char **out_json);

/**
 * Releases a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must be NULL or a string previously returned by this library, not yet freed.
 */
void hw_string_free(char *s);

/**
 * Releases a report handle. NULL is a no-op.
 *
 * # Safety
 * `report` must be NULL or a handle previously returned by `hw_hardy_run`, not yet freed.
 */
void hw_report_free(struct HwHardyReport *report);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* HARDYWEAVE_H */
