/* C API for the slekan strain-limiting constitutive toolkit.
 *
 * Maintained by hand alongside crates/slekan-ffi/src/lib.rs; a Rust test
 * (header_matches_exports) verifies that the declarations and status codes
 * here match the exported symbols.
 *
 * Conventions:
 *   - Functions returning int yield a status code (SLEKAN_OK on success)
 *     and write their result through the final out pointer.
 *   - Handles are opaque; create them with the *_new / *_parse functions
 *     and release them with the matching *_free. Freeing NULL is a no-op.
 */

#ifndef SLEKAN_H
#define SLEKAN_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
    SLEKAN_OK = 0,                /* success */
    SLEKAN_ERR_NULL_ARGUMENT = 1, /* a required pointer was NULL */
    SLEKAN_ERR_DOMAIN = 2,        /* argument outside the operation's domain */
    SLEKAN_ERR_INFEASIBLE = 3,    /* strain at or beyond the strain limit */
    SLEKAN_ERR_MODE = 4,          /* operation not applicable to this mode */
    SLEKAN_ERR_PARSE = 5,         /* malformed serialized model */
    SLEKAN_ERR_ENCODING = 6       /* input string was not valid UTF-8 */
};

/* Opaque handle for a constitutive parameter set (alpha, beta, E). */
typedef struct slekan_params slekan_params;
/* Opaque handle for a piecewise-linear spline model. */
typedef struct slekan_spline slekan_spline;

/* Creates a parameter set. All three parameters must be finite and
 * positive. On success writes the new handle through `out`. */
int slekan_params_new(double alpha, double beta, double youngs_modulus,
                      slekan_params **out);

/* Releases a parameter handle. */
void slekan_params_free(slekan_params *params);

/* Strain response at stress `tau`. */
int slekan_strain_from_stress(const slekan_params *params, double tau,
                              double *out);

/* Stress producing strain `eps`, solved to absolute tolerance `tol`.
 * |eps| must be strictly below the strain limit. */
int slekan_stress_from_strain(const slekan_params *params, double eps,
                              double tol, double *out);

/* Supremum of attainable strain magnitude, 1 / (E * beta).
 * Returns NaN if `params` is NULL. */
double slekan_strain_limit(const slekan_params *params);

/* Tangent compliance d(strain)/d(stress) at stress `tau`. */
int slekan_tangent_compliance(const slekan_params *params, double tau,
                              double *out);

/* Parses a spline model from its serialized text form (the format written
 * by the slekan CLI). On success writes the new handle through `out`. */
int slekan_spline_parse(const char *text, slekan_spline **out);

/* Signed model prediction at input `tau`. */
int slekan_spline_predict(const slekan_spline *spline, double tau,
                          double *out);

/* Number of knots in the model, or 0 if `spline` is NULL. */
size_t slekan_spline_n_knots(const slekan_spline *spline);

/* Releases a spline handle. */
void slekan_spline_free(slekan_spline *spline);

/* Static, NUL-terminated description of a status code. */
const char *slekan_error_message(int code);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SLEKAN_H */
