/* Build: cargo build -p gkflow-ffi --release
 * cc examples/residuals.c -Iinclude -L../../target/release -l:libgkflow_ffi.a -lm -lpthread -ldl -o residuals */
#include <stdio.h>
#include "gkflow.h"

int main(void) {
    GkState *st = NULL;
    if (gk_state_from_recipe("COMMUTING_GK_TORUS", 16, 0.05, &st) != GK_STATUS_OK) {
        fprintf(stderr, "recipe: %s\n", gk_last_error());
        return 1;
    }
    GkResiduals r;
    gk_state_flow(st, "GK_COUPLED", 0.005, 10, NULL);
    gk_state_residuals(st, &r);
    printf("r1 %.3e r2 %.3e r3 %.3e compat+ %.3e\n", r.r1, r.r2, r.r3, r.compat_plus);
    gk_state_free(st);
    return 0;
}
