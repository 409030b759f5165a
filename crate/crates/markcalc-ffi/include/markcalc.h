/* C interface to the markcalc Markovian process calculus workbench. */

#ifndef MARKCALC_H
#define MARKCALC_H

/* Generated by cbindgen from markcalc-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Urgency variant selector for orthogonal-time equivalence and the
 * translations.
 */
typedef enum McVariant {
  MC_VARIANT_LAZY = 0,
  MC_VARIANT_EAGER = 1,
  MC_VARIANT_MAX_PROGRESS = 2,
} McVariant;

/**
 * Status and verdict codes. Negative values are failures; inspect
 * [`mc_last_error_message`].
 */
typedef enum McStatus {
  MC_OK = 0,
  MC_INEQUIVALENT = 2,
  MC_INCONCLUSIVE = 3,
  MC_CLASS_VIOLATION = 4,
  MC_ERROR = -1,
} McStatus;

/**
 * Rate composer selector for synchronizing integrated-time actions.
 */
typedef enum McOtimes {
  MC_OTIMES_PRODUCT = 0,
  MC_OTIMES_MIN = 1,
  MC_OTIMES_SUM = 2,
} McOtimes;

/**
 * Opaque integrated-time term handle.
 */
typedef struct McItTerm McItTerm;

/**
 * Opaque orthogonal-time term handle.
 */
typedef struct McOtTerm McOtTerm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread; do not free
 * it.
 */
const char *mc_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by a `markcalc_ffi` function and not freed
 * before. Null is ignored.
 */
void mc_string_free(char *s);

/**
 * Parses an integrated-time term. Returns null on syntax errors.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string.
 */
struct McItTerm *mc_it_parse(const char *text);

/**
 * Parses an orthogonal-time term. Returns null on syntax errors.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string.
 */
struct McOtTerm *mc_ot_parse(const char *text);

/**
 * # Safety
 * `term` must come from `mc_it_parse`/`mc_encode` and not be freed twice.
 */
void mc_it_free(struct McItTerm *term);

/**
 * # Safety
 * `term` must come from `mc_ot_parse`/`mc_encode` and not be freed twice.
 */
void mc_ot_free(struct McOtTerm *term);

/**
 * Canonical text of a term; free with `mc_string_free`.
 *
 * # Safety
 * `term` must be a live handle from this library.
 */
char *mc_it_print(const struct McItTerm *term);

/**
 * # Safety
 * `term` must be a live handle from this library.
 */
char *mc_ot_print(const struct McOtTerm *term);

/**
 * 1 when the term is closed and guarded, 0 when not (the diagnostic lands
 * in the error message), negative on failure.
 *
 * # Safety
 * `term` must be a live handle from this library.
 */
int mc_it_well_formed(const struct McItTerm *term);

/**
 * # Safety
 * `term` must be a live handle from this library.
 */
int mc_ot_well_formed(const struct McOtTerm *term);

/**
 * Translates an integrated-time term; null with a class-violation message
 * when the term is outside the variant's domain.
 *
 * # Safety
 * `term` must be a live handle from this library.
 */
struct McOtTerm *mc_encode(const struct McItTerm *term, enum McVariant variant);

/**
 * Integrated-time Markovian bisimilarity of two terms.
 *
 * # Safety
 * Both handles must be live handles from this library.
 */
enum McStatus mc_equivalent_it(const struct McItTerm *left,
                               const struct McItTerm *right,
                               enum McOtimes otimes,
                               size_t max_states);

/**
 * Orthogonal-time Markovian bisimilarity under the chosen variant.
 *
 * # Safety
 * Both handles must be live handles from this library.
 */
enum McStatus mc_equivalent_ot(const struct McOtTerm *left,
                               const struct McOtTerm *right,
                               enum McVariant variant,
                               size_t max_states);

/**
 * One theorem instance: 1 when the integrated-time verdict on the pair
 * and the orthogonal-time verdict on its translations agree, 0 when they
 * do not, 3 when either side was inconclusive, 4 on a class violation,
 * negative on failure.
 *
 * # Safety
 * Both handles must be live handles from this library.
 */
int mc_check_preservation(const struct McItTerm *left,
                          const struct McItTerm *right,
                          enum McVariant variant,
                          enum McOtimes otimes,
                          size_t max_states);

/**
 * The labeled multitransition system of an integrated-time term, as JSON
 * (`as_dot` nonzero selects DOT). Null when the state bound is hit.
 *
 * # Safety
 * `term` must be a live handle from this library.
 */
char *mc_it_lts(const struct McItTerm *term, enum McOtimes otimes, size_t max_states, int as_dot);

/**
 * # Safety
 * `term` must be a live handle from this library.
 */
char *mc_ot_lts(const struct McOtTerm *term, size_t max_states, int as_dot);

/**
 * Rate matrix of the chain underlying an integrated-time term, as a JSON
 * array of arrays of exact rate strings.
 *
 * # Safety
 * `term` must be a live handle from this library.
 */
char *mc_it_ctmc(const struct McItTerm *term, enum McOtimes otimes, size_t max_states);

/**
 * Class flags of a term as JSON. For orthogonal-time terms the two
 * nondeterminism flags require exploring the state space up to
 * `max_states`.
 *
 * # Safety
 * `term` must be a live handle from this library.
 */
char *mc_it_classify(const struct McItTerm *term);

/**
 * # Safety
 * `term` must be a live handle from this library.
 */
char *mc_ot_classify(const struct McOtTerm *term, size_t max_states);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MARKCALC_H */
