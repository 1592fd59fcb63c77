#ifndef WELLPOSED_H
#define WELLPOSED_H

#include <stddef.h>

typedef enum WpStatus {
  WP_STATUS_OK = 0,
  WP_STATUS_NULL_POINTER = 1,
  WP_STATUS_INVALID_ARGUMENT = 2,
  WP_STATUS_DIMENSION = 3,
  WP_STATUS_SINGULAR = 4,
  WP_STATUS_NOT_ADMISSIBLE = 5,
  WP_STATUS_NOT_EXACT = 6,
  WP_STATUS_NON_CONVERGENT = 7,
  WP_STATUS_PARSE = 8,
  WP_STATUS_IO = 9,
  WP_STATUS_PANIC = 10,
} WpStatus;

// Opaque realization `(A, B, C, D)` with real entries.
typedef struct WpRealization WpRealization;

// Norms entering the controllability radius (see [`wp_k0_bound`]).
typedef struct WpK0Inputs {
  double t0;
  double d;
  double f;
  double phi;
  double f_pert;
  double s0;
} WpK0Inputs;

// Norms entering the observability radius (see [`wp_theta0_bound`]).
typedef struct WpTheta0Inputs {
  double t0;
  double d;
  double f;
  double f_pert;
  double psi;
  double k_obs;
  double alpha0;
} WpTheta0Inputs;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or `NULL`. Valid until the
// next call into the library on the same thread.
const char *wp_last_error(void);

// Library version as a static string.
const char *wp_version(void);

// Releases a string returned by this library. `NULL` is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void wp_string_free(char *s);

// Builds a realization from row-major `A (n x n)`, `B (n x m)`, `C (p x n)`, `D (p x m)`.
//
// # Safety
// Each non-empty matrix pointer must reference the stated number of doubles.
enum WpStatus wp_realization_new(size_t n,
                                 size_t m,
                                 size_t p,
                                 const double *a,
                                 const double *b,
                                 const double *c,
                                 const double *d,
                                 struct WpRealization **out);

// Parses a realization document (`{n, m, p, A, B, C, D}` with `[re, im]` entries).
// Complex entries with nonzero imaginary part are rejected.
//
// # Safety
// `json` must be a NUL-terminated string.
enum WpStatus wp_realization_from_json(const char *json, struct WpRealization **out);

// Serializes a realization; release the string with [`wp_string_free`].
//
// # Safety
// `r` must be a live handle.
enum WpStatus wp_realization_to_json(const struct WpRealization *r, char **out);

// Writes the state, input and output dimensions.
//
// # Safety
// `r` must be a live handle; outputs must be writable.
enum WpStatus wp_realization_dims(const struct WpRealization *r, size_t *n, size_t *m, size_t *p);

// Releases a realization. `NULL` is ignored.
//
// # Safety
// `r` must come from this library and not be freed twice.
void wp_realization_free(struct WpRealization *r);

// `G(lambda) = C (lambda - A)^{-1} B + D`, written as `p x m` row-major real
// and imaginary parts.
//
// # Safety
// `r` must be a live handle; `re`, `im` must hold `p * m` doubles.
enum WpStatus wp_transfer(const struct WpRealization *r,
                          double lambda_re,
                          double lambda_im,
                          double *re,
                          double *im);

// Closed loop under output feedback `u = Gamma y + v` with row-major `Gamma (m x p)`.
//
// # Safety
// `r` must be a live handle; `gamma` must hold `m * p` doubles.
enum WpStatus wp_closed_loop(const struct WpRealization *r,
                             const double *gamma,
                             struct WpRealization **out);

// Radius of surjectivity of the input map on `[0, t0]` sampled with `steps`
// holds, and whether it counts as exactly controllable.
//
// # Safety
// `r` must be a live handle; outputs must be writable.
enum WpStatus wp_controllability(const struct WpRealization *r,
                                 double t0,
                                 size_t steps,
                                 double *sigma_min,
                                 int *exact);

// Observability constant `k` in `|Psi(t0) x| >= k |x|` and its exactness flag.
//
// # Safety
// `r` must be a live handle; outputs must be writable.
enum WpStatus wp_observability(const struct WpRealization *r,
                               double t0,
                               size_t steps,
                               double *constant,
                               int *exact);

// `k0 = min{1/|D|, 1/|F|, s0 / (|Phi| |F_P| + s0 |F|)}`; infinite terms are `INFINITY`.
//
// # Safety
// `x` must be readable and `out` writable.
enum WpStatus wp_k0_bound(const struct WpK0Inputs *x, double *out);

// `theta0 = min{1/|D|, 1/|F|, (k - a) / ((k - a)|F| + |F_dC| |Psi|)}`.
//
// # Safety
// `x` must be readable and `out` writable.
enum WpStatus wp_theta0_bound(const struct WpTheta0Inputs *x, double *out);

// Shear-to-tip-slope transfer function of the clamped beam, `s > 0`.
//
// # Safety
// `out` must be writable.
enum WpStatus wp_beam_transfer_h(double s, double *out);

// Shear-to-root-curvature transfer function of the clamped beam, `s > 0`.
//
// # Safety
// `out` must be writable.
enum WpStatus wp_beam_transfer_h1(double s, double *out);

// Runs one experiment from a JSON config. On `WP_OK` the report JSON is
// written to `report` and `passed` is 1 iff every assertion held.
//
// # Safety
// `config` must be a NUL-terminated string; outputs must be writable.
enum WpStatus wp_run_experiment(const char *config, char **report, int *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WELLPOSED_H */
