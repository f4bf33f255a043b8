#include <stdio.h>
#include <string.h>
#include "cycledger.h"

int main(void) {
    double p = 0.0;
    if (cyc_hypergeom_tail(6, 2, 3, &p) != CYC_STATUS_OK || p < 0.1999999 || p > 0.2000001) return 1;
    if (cyc_hypergeom_tail(6, 7, 3, &p) != CYC_STATUS_DOMAIN || strlen(cyc_last_error()) == 0) return 2;
    CycSim *sim = NULL;
    if (cyc_sim_run("rounds = 1\n", 5, &sim) != CYC_STATUS_OK) return 3;
    if (cyc_sim_rounds(sim) != 1 || cyc_sim_blocks(sim) != 1) return 4;
    const char *csv = cyc_sim_output(sim, CYC_OUTPUT_METRICS_CSV);
    if (strncmp(csv, "round,", 6) != 0) return 5;
    cyc_sim_free(sim);
    if (cyc_sim_run("rounds = 0\n", 5, &sim) != CYC_STATUS_CONFIG || sim != NULL) return 6;
    puts("ok");
    return 0;
}
