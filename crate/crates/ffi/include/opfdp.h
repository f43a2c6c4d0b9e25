#ifndef OPFDP_H
#define OPFDP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. `OPFDP_STATUS_OK` is zero.
typedef enum OpfdpStatus {
  OPFDP_STATUS_OK = 0,
  OPFDP_STATUS_NULL_POINTER = 1,
  OPFDP_STATUS_INVALID_INPUT = 2,
  OPFDP_STATUS_INFEASIBLE = 3,
  OPFDP_STATUS_UNBOUNDED = 4,
  OPFDP_STATUS_NONSMOOTH = 5,
  OPFDP_STATUS_BUFFER_TOO_SMALL = 6,
  OPFDP_STATUS_IO = 7,
  OPFDP_STATUS_INTERNAL = 8,
  OPFDP_STATUS_PANIC = 9,
} OpfdpStatus;

// Opaque handle to a loaded case.
typedef struct OpfdpCase OpfdpCase;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or an empty string. The
// pointer stays valid until the next call on the same thread.
const char *opfdp_last_error(void);

// Parses a JSON case document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum OpfdpStatus opfdp_case_from_json(const char *json, struct OpfdpCase **out);

// Reads a JSON case file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum OpfdpStatus opfdp_case_from_file(const char *path, struct OpfdpCase **out);

// Builds a built-in case: `"radial"`, `"case9"` or `"ring"` (`n` buses; 0
// picks the default).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum OpfdpStatus opfdp_case_fixture(const char *name, size_t n, struct OpfdpCase **out);

// Releases a case handle. Null is ignored.
//
// # Safety
// `case` must come from one of the constructors and not be freed twice.
void opfdp_case_free(struct OpfdpCase *case_);

// Counts of buses, generators, loads and regions (0 when the case has none).
// Any output pointer may be null.
//
// # Safety
// `case` must be a live handle; non-null outputs must be writable.
enum OpfdpStatus opfdp_case_dims(const struct OpfdpCase *case_,
                                 size_t *n_buses,
                                 size_t *n_generators,
                                 size_t *n_loads,
                                 size_t *n_regions);

// Optimal generation (MW) at the given loads. Pass `loads = NULL` to use the
// case loads.
//
// # Safety
// `loads`, if not null, must point to `n_loads` values; `gen_out` must hold
// `capacity` values; `len_out` may be null.
enum OpfdpStatus opfdp_case_solve(const struct OpfdpCase *case_,
                                  const double *loads,
                                  size_t n_loads,
                                  double *gen_out,
                                  size_t capacity,
                                  size_t *len_out);

// Sweep estimate of the monotonicity pair at the case loads: the worst
// negative sum `epsilon` over increments up to `delta` MW on every load, and
// `epsilon / delta`. The value is a lower bound on the true epsilon.
//
// # Safety
// `case` must be a live handle; `epsilon_out` and `ratio_out` may be null.
enum OpfdpStatus opfdp_case_monotonicity(const struct OpfdpCase *case_,
                                         double delta,
                                         double *epsilon_out,
                                         double *ratio_out);

// Laplace scale `2(delta + epsilon)/rho` for releasing regional totals.
//
// # Safety
// `out` must be writable.
enum OpfdpStatus opfdp_aggregation_scale(double delta, double epsilon, double rho, double *out);

// Laplace scale `2 U r (delta + epsilon)/rho` for a query with Jacobian bound
// `U` over `regions` regions.
//
// # Safety
// `out` must be writable.
enum OpfdpStatus opfdp_general_scale(double jacobian_bound,
                                     size_t regions,
                                     double delta,
                                     double epsilon,
                                     double rho,
                                     double *out);

// Noisy regional aggregates at the case loads over the case's regions:
// generation totals for each region, then load totals. A negative `epsilon`
// uses the sweep estimate. The same `seed` gives the same output.
//
// # Safety
// `case` must be a live handle; `out` must hold `capacity` values; `len_out`
// and `scale_out` may be null.
enum OpfdpStatus opfdp_case_release(const struct OpfdpCase *case_,
                                    double delta,
                                    double rho,
                                    double epsilon,
                                    uint64_t seed,
                                    double *out,
                                    size_t capacity,
                                    size_t *len_out,
                                    double *scale_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPFDP_H */
