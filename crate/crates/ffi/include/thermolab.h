#ifndef THERMOLAB_H
#define THERMOLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum TlStatus {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_POINTER = 1,
  TL_STATUS_INVALID_ARGUMENT = 2,
  TL_STATUS_UNSUPPORTED = 3,
  TL_STATUS_NUMERICAL = 4,
  TL_STATUS_SINGULAR_SHIFT = 5,
  TL_STATUS_TOO_LARGE = 6,
  TL_STATUS_BUFFER_TOO_SMALL = 7,
  TL_STATUS_PANIC = 8,
} TlStatus;

// Degeneracy class codes.
typedef enum TlClass {
  TL_CLASS_NON_DEGENERATE = 0,
  TL_CLASS_WDP = 1,
  TL_CLASS_SDP = 2,
  TL_CLASS_UNSUPPORTED = 3,
} TlClass;

// Time integration schemes.
typedef enum TlScheme {
  TL_SCHEME_BACKWARD_EULER = 0,
  TL_SCHEME_IMPLICIT_MIDPOINT = 1,
} TlScheme;

// Opaque assembled operator.
typedef struct TlOperator TlOperator;

// Opaque degeneracy profile.
typedef struct TlProfile TlProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *tl_version(void);

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length without the NUL.
size_t tl_last_error_message(char *buf, size_t len);

// `a(x) = x^alpha`.
enum TlStatus tl_profile_power_law(double alpha, struct TlProfile **profile);

// Tabulated profile from `len` samples `(x[i], a[i])`.
enum TlStatus tl_profile_tabulated(const double *x,
                                   const double *a,
                                   size_t len,
                                   struct TlProfile **profile);

void tl_profile_free(struct TlProfile *profile);

enum TlStatus tl_profile_class(const struct TlProfile *profile, enum TlClass *class_);

// `W(x)`.
enum TlStatus tl_eval_w(const struct TlProfile *profile, double x, double *value);

// `int_0^1 W`.
enum TlStatus tl_w_l1_norm(const struct TlProfile *profile, double *value);

// Hilbert-Schmidt norm of the temperature kernel.
enum TlStatus tl_hs_norm_k(const struct TlProfile *profile, double *value);

// Temperature of the Green's solution for `f = g = 0`, `h = 1`, at the
// `len` points `x`.
enum TlStatus tl_greens_unit_heat_theta(const struct TlProfile *profile,
                                        double kappa,
                                        const double *x,
                                        double *theta,
                                        size_t len);

// Assembles the operator on the graded mesh `x_i = (i/n)^gamma`; a
// non-positive `gamma` selects the default grading.
enum TlStatus tl_operator_new(const struct TlProfile *profile,
                              size_t n,
                              double gamma,
                              double kappa,
                              struct TlOperator **operator_);

void tl_operator_free(struct TlOperator *operator_);

// Sizes of the `u`, `v` blocks (`n_u` each), the `theta` block and the
// whole state. States are flat arrays `(u, v, theta)` of length `n_dof`.
enum TlStatus tl_operator_dims(const struct TlOperator *operator_,
                               size_t *n_u,
                               size_t *n_theta,
                               size_t *n_dof);

// `result <- A_h state`.
enum TlStatus tl_operator_apply(const struct TlOperator *operator_,
                                const double *state,
                                double *result,
                                size_t len);

// Energy `1/2 <U, U>_G`.
enum TlStatus tl_operator_energy(const struct TlOperator *operator_,
                                 const double *state,
                                 size_t len,
                                 double *value);

// Largest real part of the spectrum (dense; limited size).
enum TlStatus tl_spectral_abscissa(const struct TlOperator *operator_, double *value);

// `||(i lambda - A_h)^{-1}||` in the energy norm.
enum TlStatus tl_resolvent_norm(const struct TlOperator *operator_, double lambda, double *value);

// Integrates from `state` to `t_final` and writes `E(k dt)`,
// `k = 0..=steps`, into `energies`, which must hold `steps + 1` values
// (`steps = t_final / dt`). `written` receives the count written, or the
// required count on [`TlStatus::BufferTooSmall`].
enum TlStatus tl_simulate_energies(const struct TlOperator *operator_,
                                   const double *state,
                                   size_t len,
                                   double t_final,
                                   double dt,
                                   enum TlScheme scheme,
                                   double *energies,
                                   size_t capacity,
                                   size_t *written);

// Decay rate fitted to `log E` over the final `tail_fraction` of `times`.
enum TlStatus tl_fit_decay_rate(const double *times,
                                const double *energies,
                                size_t len,
                                double tail_fraction,
                                double *rate);

// Interprets a NUL-terminated scheme name (`backward_euler`,
// `implicit_midpoint`).
enum TlStatus tl_scheme_from_name(const char *name, enum TlScheme *scheme);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THERMOLAB_H */
