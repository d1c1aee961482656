/* Build: cc examples/cluster.c -Iinclude -L../../target/release -l:libmlclust_ffi.a -lpthread -ldl -lm */
#include <stdio.h>
#include "mlclust.h"

int main(void) {
    double v[16] = {
        1.0, 0.8, 0.0, 0.0,
        0.8, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, 0.7,
        0.0, 0.0, 0.7, 1.0,
    };
    MlcCorrelation *c = NULL;
    if (mlc_correlation_new(4, v, &c) != MLC_STATUS_OK) {
        fprintf(stderr, "%s\n", mlc_last_error());
        return 1;
    }
    MlcGaConfig cfg = mlc_ga_config_default();
    cfg.population_size = 200;
    MlcGaResult *r = NULL;
    if (mlc_evolve(c, &cfg, &r) != MLC_STATUS_OK) {
        fprintf(stderr, "%s\n", mlc_last_error());
        mlc_correlation_free(c);
        return 1;
    }
    uint32_t labels[4];
    mlc_result_labels(r, labels, 4);
    printf("L = %.6f labels = %u %u %u %u\n", mlc_result_fitness(r), labels[0], labels[1], labels[2], labels[3]);
    mlc_result_free(r);
    mlc_correlation_free(c);
    return 0;
}
