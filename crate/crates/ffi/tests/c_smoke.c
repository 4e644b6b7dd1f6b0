#include <math.h>
#include <stdio.h>
#include "haar_bloom.h"

int main(void) {
    double b[16], w[16], out = 0.0;
    for (int k = 0; k < 16; k++) {
        b[k] = (double)((k * 7) % 5) - 2.0;
        w[k] = 1.0;
    }
    HbGrid *g = NULL;
    HbWeight *u = NULL;
    if (hb_grid_new(2, b, 16, &g) != HB_STATUS_OK) return 1;
    if (hb_weight_new(2, w, 16, &u) != HB_STATUS_OK) return 2;
    if (hb_bmo_two_weight(g, u, u, 2.0, false, 0, 0, &out) != HB_STATUS_OK) return 3;
    if (!(out > 0.0)) return 4;
    if (hb_grid_new(2, b, 15, &g) != HB_STATUS_INVALID_ARGUMENT) return 5;
    if (hb_last_error_message() == NULL) return 6;
    printf("%.17g\n", out);
    hb_grid_free(g);
    hb_weight_free(u);
    return 0;
}
