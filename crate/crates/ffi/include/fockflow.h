#ifndef FOCKFLOW_H
#define FOCKFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum FfStatus {
  FF_STATUS_OK = 0,
  FF_STATUS_NULL_POINTER = 1,
  FF_STATUS_INVALID_ARGUMENT = 2,
  FF_STATUS_SHAPE_MISMATCH = 3,
  FF_STATUS_NUMERICAL = 4,
  FF_STATUS_IO = 5,
  FF_STATUS_PARSE = 6,
  FF_STATUS_PANIC = 7,
} FfStatus;

/**
 * A layered Gaussian + Kerr circuit.
 */
typedef struct FfCircuit FfCircuit;

/**
 * A truncated Fock-basis state on one or two modes.
 */
typedef struct FfState FfState;

/**
 * Parameters of one Gaussian gate. Entries past `modes` are ignored; the
 * beamsplitter angles are read only when `modes == 2`.
 */
typedef struct FfGate {
  uintptr_t modes;
  double gamma_re[2];
  double gamma_im[2];
  double r[2];
  double delta[2];
  double phi[2];
  /**
   * `[theta, varphi]` before the squeezers.
   */
  double bs_pre[2];
  /**
   * `[theta, varphi]` after the squeezers.
   */
  double bs_post[2];
} FfGate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length, 0 if there is none.
 */
uintptr_t ff_last_error_message(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ff_version(void);

enum FfStatus ff_state_new_vacuum(uintptr_t modes, uintptr_t cutoff, struct FfState **out);

/**
 * `photons` holds one photon number per mode.
 */
enum FfStatus ff_state_new_fock(uintptr_t modes,
                                uintptr_t cutoff,
                                const uintptr_t *photons,
                                struct FfState **out);

/**
 * Build a state from `len = cutoff^modes` amplitudes in row-major order.
 */
enum FfStatus ff_state_new_from_amplitudes(uintptr_t modes,
                                           uintptr_t cutoff,
                                           const double *re,
                                           const double *im,
                                           uintptr_t len,
                                           struct FfState **out);

enum FfStatus ff_state_read_file(const char *path, struct FfState **out);

enum FfStatus ff_state_write_file(const struct FfState *state, const char *path);

/**
 * Release a state. Null is ignored.
 */
void ff_state_free(struct FfState *state);

/**
 * Number of modes, 0 for a null handle.
 */
uintptr_t ff_state_modes(const struct FfState *state);

uintptr_t ff_state_cutoff(const struct FfState *state);

/**
 * Number of amplitudes, `cutoff^modes`.
 */
uintptr_t ff_state_len(const struct FfState *state);

enum FfStatus ff_state_norm_sqr(const struct FfState *state, double *out);

/**
 * Copy the amplitudes out; `len` must equal [`ff_state_len`].
 */
enum FfStatus ff_state_amplitudes(const struct FfState *state,
                                  double *re,
                                  double *im,
                                  uintptr_t len);

/**
 * Apply a Gaussian gate with the direct recurrences.
 */
enum FfStatus ff_evolve(const struct FfGate *gate,
                        const struct FfState *input,
                        struct FfState **out);

/**
 * Single-mode evolution under the large-squeezing approximation.
 * The result is not renormalized.
 */
enum FfStatus ff_evolve_large_r(const struct FfGate *gate,
                                const struct FfState *input,
                                struct FfState **out);

/**
 * Kerr gates with one strength per mode.
 */
enum FfStatus ff_apply_kerr(const double *kappa,
                            uintptr_t len,
                            const struct FfState *input,
                            struct FfState **out);

/**
 * `layers` identity layers (Gaussian gate, then Kerr).
 */
enum FfStatus ff_circuit_new(uintptr_t modes,
                             uintptr_t cutoff,
                             uintptr_t layers,
                             struct FfCircuit **out);

void ff_circuit_free(struct FfCircuit *c);

/**
 * Length of the flat parameter vector, 0 for a null handle.
 */
uintptr_t ff_circuit_num_params(const struct FfCircuit *c);

enum FfStatus ff_circuit_get_params(const struct FfCircuit *c,
                                    double *re,
                                    double *im,
                                    uintptr_t len);

/**
 * Overwrite all parameters. Imaginary parts of real coordinates are ignored.
 */
enum FfStatus ff_circuit_set_params(struct FfCircuit *c,
                                    const double *re,
                                    const double *im,
                                    uintptr_t len);

enum FfStatus ff_circuit_apply(const struct FfCircuit *c,
                               const struct FfState *input,
                               struct FfState **out);

/**
 * Fidelity loss `1 - |<target|U|input>|^2` and its gradient. For complex
 * coordinates the gradient is `dL/dxi*`, for real ones `dL/dxi`.
 */
enum FfStatus ff_circuit_fidelity_loss(const struct FfCircuit *c,
                                       const struct FfState *input,
                                       const struct FfState *target,
                                       double *loss,
                                       double *grad_re,
                                       double *grad_im,
                                       uintptr_t len);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* FOCKFLOW_H */
