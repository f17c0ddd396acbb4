#ifndef BAE_FFI_H
#define BAE_FFI_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `BAE_STATUS_OK` is zero; the rest mirror the error kinds of
 * the core library plus argument errors at the boundary.
 */
typedef enum BaeStatus {
  BAE_STATUS_OK = 0,
  BAE_STATUS_NULL_POINTER = 1,
  BAE_STATUS_INVALID_UTF8 = 2,
  BAE_STATUS_INVALID_ARGUMENT = 3,
  BAE_STATUS_BUFFER_TOO_SMALL = 4,
  BAE_STATUS_PARSE_ERROR = 10,
  BAE_STATUS_VALIDATION_ERROR = 11,
  BAE_STATUS_INVALID_PARAMETER = 12,
  BAE_STATUS_DEGENERATE_PUMPS = 13,
  BAE_STATUS_UNEQUAL_OCCUPATIONS = 14,
  BAE_STATUS_NON_HERMITIAN_RESULT = 15,
  BAE_STATUS_SIDEBAND_OVERFLOW = 16,
  BAE_STATUS_PHASE_CONDITION_VIOLATED = 17,
  BAE_STATUS_NOT_CONVERGED = 18,
  BAE_STATUS_ILL_CONDITIONED = 19,
  BAE_STATUS_EXTRACTION_ILL_CONDITIONED = 20,
  BAE_STATUS_INVALID_GRID = 21,
  BAE_STATUS_IO_ERROR = 22,
  BAE_STATUS_PANIC = 99,
} BaeStatus;

/**
 * Selects how the Duan variances are obtained.
 */
typedef enum BaeDuanMethod {
  BAE_DUAN_METHOD_DIRECT = 0,
  BAE_DUAN_METHOD_OUTPUT = 1,
} BaeDuanMethod;

/**
 * Collective quadrature selector.
 */
typedef enum BaeQuadrature {
  BAE_QUADRATURE_X_SIGMA = 0,
  BAE_QUADRATURE_Y_SIGMA = 1,
  BAE_QUADRATURE_X_DELTA = 2,
  BAE_QUADRATURE_Y_DELTA = 3,
} BaeQuadrature;

/**
 * Opaque simulator handle.
 */
typedef struct BaeSimulator BaeSimulator;

typedef struct BaeDuanResult {
  double var_x_sigma;
  double var_y_delta;
  double duan_sum;
  bool violated;
} BaeDuanResult;

typedef struct BaeVerdict {
  bool pass;
  bool phase_ok;
  /**
   * φ₁ − φ₂ wrapped into (−π, π].
   */
  double dphi;
  /**
   * Largest residual among checks required to vanish.
   */
  double max_zero_residual;
  /**
   * Smallest exposed-quadrature norm, or 0 when none is exposed.
   */
  double min_exposed_norm;
} BaeVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a simulator from `key=value` configuration text (NUL-terminated,
 * UTF-8). An empty string selects the defaults.
 *
 * # Safety
 * `config` must be a valid C string and `out` a writable pointer.
 */
enum BaeStatus bae_simulator_new(const char *config, struct BaeSimulator **out);

/**
 * Releases a simulator. Null is ignored.
 *
 * # Safety
 * `sim` must be null or a live handle; it is invalid afterwards.
 */
void bae_simulator_free(struct BaeSimulator *sim);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t bae_last_error(char *buf, size_t len);

/**
 * Writes the 64-character config fingerprint plus NUL into `buf`.
 *
 * # Safety
 * `sim` must be a live handle and `buf` point to `len` writable bytes.
 */
enum BaeStatus bae_fingerprint(const struct BaeSimulator *sim, char *buf, size_t len);

/**
 * Duan variances and their sum.
 *
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum BaeStatus bae_duan(const struct BaeSimulator *sim,
                        enum BaeDuanMethod method,
                        struct BaeDuanResult *out);

/**
 * Symmetrized spectrum of an unprobed collective quadrature at `n`
 * frequencies.
 *
 * # Safety
 * `sim` must be a live handle; `omega` and `values` must hold `n` doubles.
 */
enum BaeStatus bae_quadrature_spectrum(const struct BaeSimulator *sim,
                                       enum BaeQuadrature quadrature,
                                       const double *omega,
                                       size_t n,
                                       double *values);

/**
 * Homodyne output spectrum at the configured relative angle `theta`.
 *
 * # Safety
 * `sim` must be a live handle; `omega` and `values` must hold `n` doubles.
 */
enum BaeStatus bae_output_spectrum(const struct BaeSimulator *sim,
                                   const double *omega,
                                   size_t n,
                                   double *values);

/**
 * Backaction-evasion verdict for the configured probe.
 *
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum BaeStatus bae_verify(const struct BaeSimulator *sim, struct BaeVerdict *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BAE_FFI_H */
