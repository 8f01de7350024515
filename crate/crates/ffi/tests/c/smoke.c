#include <stdio.h>
#include <math.h>
#include "lpmhd.h"

#define CHECK(call)                                                   \
  do {                                                                \
    LpmhdStatus st_ = (call);                                         \
    if (st_ != LPMHD_STATUS_OK) {                                     \
      char msg[512];                                                  \
      size_t len;                                                     \
      lpmhd_last_error_message(msg, sizeof msg, &len);                \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)st_, msg);        \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  LpmhdState *state = NULL;
  LpmhdStepper *stepper = NULL;
  LpmhdLedger *ledger = NULL;
  LpmhdRates rates;
  double t, e0, e1;

  CHECK(lpmhd_state_orszag_tang(32, &state));
  CHECK(lpmhd_stepper_new(2, 32, 0.05, 1e-3, &stepper));
  CHECK(lpmhd_state_info(state, NULL, &e0, NULL));
  CHECK(lpmhd_stepper_advance(stepper, state, 5));
  CHECK(lpmhd_state_info(state, &t, &e1, NULL));
  CHECK(lpmhd_ledger_new(2, 32, 1.2, 2.2, &ledger));
  CHECK(lpmhd_ledger_rates(ledger, state, 0.05, &rates));

  if (lpmhd_state_orszag_tang(17, &state) != LPMHD_STATUS_INVALID_ARGUMENT) return 2;
  printf("t=%.6f e0=%.6f e1=%.6f du_dt=%.6e\n", t, e0, e1, rates.du_dt);

  lpmhd_ledger_free(ledger);
  lpmhd_stepper_free(stepper);
  lpmhd_state_free(state);
  return (fabs(t - 0.005) < 1e-12 && e1 < e0) ? 0 : 3;
}
