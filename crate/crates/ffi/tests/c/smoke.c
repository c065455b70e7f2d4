#include <stdio.h>
#include <string.h>

#include "cardlab.h"

#define CHECK(cond)                                                    \
  do {                                                                 \
    if (!(cond)) {                                                     \
      const char *e = cardlab_last_error();                            \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond, e ? e : ""); \
      return 1;                                                        \
    }                                                                  \
  } while (0)

int main(void) {
  CardlabMatrix *m = NULL;
  CHECK(cardlab_evaluate(0, &m) == CARDLAB_STATUS_OK);
  CHECK(cardlab_matrix_check_expected(m) == CARDLAB_STATUS_OK);

  CardlabVerdict v;
  size_t n = 0;
  CHECK(cardlab_matrix_cell(m, CARDLAB_PROTOCOL_XU, 5, &v, &n) == CARDLAB_STATUS_OK);
  CHECK(v == CARDLAB_VERDICT_VIOLATED && n > 0);
  CHECK(cardlab_matrix_cell(m, CARDLAB_PROTOCOL_KIM, 11, &v, &n) == CARDLAB_STATUS_INVALID_ARGUMENT);
  CHECK(cardlab_last_error() != NULL);

  char *text = NULL;
  CHECK(cardlab_matrix_render(m, false, &text) == CARDLAB_STATUS_OK);
  CHECK(strstr(text, "VIOLATED") != NULL);
  cardlab_string_free(text);
  cardlab_matrix_free(m);

  CardlabAttackReport *r = NULL;
  CHECK(cardlab_attack_run(CARDLAB_PROTOCOL_LI, NULL, 0, &r) == CARDLAB_STATUS_OK);
  CHECK(cardlab_attack_succeeded(r));
  size_t logins = 0, guesses = 0;
  CHECK(cardlab_attack_guess_counts(r, &logins, &guesses) == CARDLAB_STATUS_OK);
  CHECK(logins == 1 && guesses > 0);
  char *pw = cardlab_attack_recovered_password(r);
  CHECK(pw != NULL && strcmp(pw, "sunshine7") == 0);
  cardlab_string_free(pw);
  cardlab_attack_free(r);

  bool accepted = false;
  CHECK(cardlab_honest_run(CARDLAB_PROTOCOL_JUANG, 0, &accepted) == CARDLAB_STATUS_OK && accepted);
  CHECK(cardlab_honest_run(9, 0, &accepted) == CARDLAB_STATUS_INVALID_ARGUMENT);
  puts("ok");
  return 0;
}
