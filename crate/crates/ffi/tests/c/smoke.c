#include <math.h>
#include <stdio.h>
#include <string.h>

#include "cbohf.h"

static const char *H2 = "2\nH2\nH 0 0 0\nH 0 0 0.7408481\n";

int main(void) {
    CbohfSystem *sys = NULL;
    if (cbohf_system_new(H2, 0, "sto-3g", &sys) != CBOHF_STATUS_OK) {
        return 1;
    }
    double e = 0.0;
    if (cbohf_rhf_energy(sys, &e) != CBOHF_STATUS_OK) {
        return 2;
    }
    double lambda[3] = {0.0, 0.0, 0.05};
    CbohfReport r;
    if (cbohf_optimize_qc(sys, lambda, 0.02, &r) != CBOHF_STATUS_OK) {
        return 3;
    }
    cbohf_system_free(sys);

    CbohfSystem *bad = NULL;
    if (cbohf_system_new("not xyz", 0, "sto-3g", &bad) != CBOHF_STATUS_INVALID_INPUT || bad != NULL) {
        return 4;
    }
    char msg[256];
    size_t n = cbohf_last_error_message(msg, sizeof msg);
    if (n == 0 || strlen(msg) == 0) {
        return 5;
    }
    printf("%.10f %.10f %.3e\n", e, r.e_cbo, r.e_lin + 2.0 * r.e_dis);
    return 0;
}
