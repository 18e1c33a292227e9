#include <math.h>
#include <stdio.h>
#include <string.h>

#include "bose_transit.h"

static int check(BtStatus s, const char *what) {
    if (s != BT_STATUS_OK) {
        const char *msg = bt_last_error_message();
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, msg ? msg : "");
        return 1;
    }
    return 0;
}

int main(void) {
    double z = 0.0;
    if (check(bt_riemann_zeta(2.0, &z), "zeta")) return 1;
    if (fabs(z - M_PI * M_PI / 6.0) > 1e-12) return 2;

    double x[2] = {1.0, 0.0}, y[2] = {0.0, 1.0}, c[4] = {0.0, 3.0, 3.0, 0.0}, w = 0.0;
    if (check(bt_wasserstein(2, x, y, c, &w), "wasserstein")) return 1;
    if (fabs(w - 3.0) > 1e-12) return 3;

    BtBoundParams *p = NULL;
    if (check(bt_bound_params_new(1.0, 2.0, 3.0, 1, 0.5, &p), "params")) return 1;
    BtBoundResult r;
    if (check(bt_bound_evaluate(p, BT_BOUND_KIND_CLOSED_TAU, 2.0, 0.0, 1, &r), "evaluate")) return 1;
    bt_bound_params_free(p);
    if (!r.feasible || !(r.value > 0.0)) return 4;

    BtScenario *s = NULL;
    if (bt_scenario_from_json("{\"name\": 1}", &s) != BT_STATUS_SCHEMA) return 5;
    if (bt_last_error_message() == NULL) return 6;

    printf("ok %s\n", bt_version());
    return 0;
}
