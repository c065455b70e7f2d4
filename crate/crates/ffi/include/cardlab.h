#ifndef CARDLAB_H
#define CARDLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CardlabProtocol {
  CARDLAB_PROTOCOL_JUANG = 0,
  CARDLAB_PROTOCOL_HSIANG = 1,
  CARDLAB_PROTOCOL_KIM = 2,
  CARDLAB_PROTOCOL_XU = 3,
  CARDLAB_PROTOCOL_LI = 4,
} CardlabProtocol;

typedef enum CardlabStatus {
  CARDLAB_STATUS_OK = 0,
  CARDLAB_STATUS_NULL_POINTER = 1,
  CARDLAB_STATUS_INVALID_ARGUMENT = 2,
  CARDLAB_STATUS_CONFIG = 3,
  CARDLAB_STATUS_NOT_FOUND = 4,
  CARDLAB_STATUS_REJECTED = 5,
  CARDLAB_STATUS_EVALUATION_FAILED = 6,
  CARDLAB_STATUS_PANIC = 7,
} CardlabStatus;

typedef enum CardlabVerdict {
  CARDLAB_VERDICT_NOT_EVALUATED = 0,
  CARDLAB_VERDICT_SATISFIED_BY_DEMONSTRATION = 1,
  CARDLAB_VERDICT_VIOLATED = 2,
} CardlabVerdict;

/**
 * Opaque attack report.
 */
typedef struct CardlabAttackReport CardlabAttackReport;

/**
 * Opaque verdict matrix.
 */
typedef struct CardlabMatrix CardlabMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into this library on the same thread.
 */
const char *cardlab_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void cardlab_string_free(char *s);

/**
 * Builds the verdict matrix for `seed`. `EVALUATION_FAILED` when a scenario
 * fails to produce its evidence; the matrix is not returned in that case.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum CardlabStatus cardlab_evaluate(uint64_t seed, struct CardlabMatrix **out);

/**
 * # Safety
 * `m` must be NULL or a handle from [`cardlab_evaluate`], not yet freed.
 */
void cardlab_matrix_free(struct CardlabMatrix *m);

/**
 * Status of one cell; `requirement_number` is 1 through 10.
 *
 * # Safety
 * `m` must be a live matrix handle and `out` valid for one write.
 */
enum CardlabStatus cardlab_matrix_cell(const struct CardlabMatrix *m,
                                       uint32_t protocol,
                                       uint32_t requirement_number,
                                       enum CardlabVerdict *out,
                                       size_t *evidence_count);

/**
 * Compares against the expected cells; `EVALUATION_FAILED` names the first
 * mismatch through [`cardlab_last_error`].
 *
 * # Safety
 * `m` must be a live matrix handle.
 */
enum CardlabStatus cardlab_matrix_check_expected(const struct CardlabMatrix *m);

/**
 * Text or line-delimited JSON rendering; free with [`cardlab_string_free`].
 *
 * # Safety
 * `m` must be a live matrix handle and `out` valid for one write.
 */
enum CardlabStatus cardlab_matrix_render(const struct CardlabMatrix *m,
                                         bool structured,
                                         char **out);

/**
 * Runs the honest scenario with the bundled participants. `REJECTED` when
 * either side refuses.
 *
 * # Safety
 * `accepted` must be NULL or valid for one write.
 */
enum CardlabStatus cardlab_honest_run(uint32_t protocol, uint64_t seed, bool *accepted);

/**
 * Runs the protocol's attack. `dictionary_path` NULL selects the bundled
 * list; xu ignores it. The report is returned even when the status is
 * `NOT_FOUND` or `REJECTED`.
 *
 * # Safety
 * `dictionary_path` must be NULL or a NUL-terminated string; `out` must be
 * valid for one write.
 */
enum CardlabStatus cardlab_attack_run(uint32_t protocol,
                                      const char *dictionary_path,
                                      uint64_t seed,
                                      struct CardlabAttackReport **out);

/**
 * # Safety
 * `r` must be NULL or a handle from [`cardlab_attack_run`], not yet freed.
 */
void cardlab_attack_free(struct CardlabAttackReport *r);

/**
 * Password recovered or insider accepted. False for NULL.
 *
 * # Safety
 * `r` must be NULL or a live report handle.
 */
bool cardlab_attack_succeeded(const struct CardlabAttackReport *r);

/**
 * Envelopes the attack put on the network.
 *
 * # Safety
 * `r` must be NULL or a live report handle.
 */
size_t cardlab_attack_online_messages(const struct CardlabAttackReport *r);

/**
 * Login requests sent and candidates tried; both zero for xu.
 *
 * # Safety
 * `r` must be a live report handle; the out pointers may be NULL.
 */
enum CardlabStatus cardlab_attack_guess_counts(const struct CardlabAttackReport *r,
                                               size_t *login_requests_sent,
                                               size_t *guesses_tried);

/**
 * Recovered password, or NULL when none was found. Free with
 * [`cardlab_string_free`].
 *
 * # Safety
 * `r` must be NULL or a live report handle.
 */
char *cardlab_attack_recovered_password(const struct CardlabAttackReport *r);

/**
 * Structured transcript of the attack scenario. Free with
 * [`cardlab_string_free`].
 *
 * # Safety
 * `r` must be NULL or a live report handle.
 */
char *cardlab_attack_transcript(const struct CardlabAttackReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CARDLAB_H */
