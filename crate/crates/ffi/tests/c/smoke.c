#include <stdio.h>
#include <string.h>

#include "gridot.h"

#define CHECK(expr)                                                     \
    do {                                                                \
        if (!(expr)) {                                                  \
            const char *msg = gridot_last_error_message();              \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,     \
                    #expr, msg ? msg : "no message");                   \
            return 1;                                                   \
        }                                                               \
    } while (0)

int main(void) {
    enum { N = 400 };
    double src[N], dst[N];
    for (int k = 0; k < N; ++k) {
        src[k] = (k + 0.5) / N;
        dst[k] = 3.0 + (k + 0.5) / N;
    }
    GridotSamples *a = NULL, *b = NULL;
    CHECK(gridot_samples_new(src, N, 1, &a) == GRIDOT_STATUS_OK);
    CHECK(gridot_samples_new(dst, N, 1, &b) == GRIDOT_STATUS_OK);

    GridotSolveConfig cfg = gridot_solve_config_default();
    cfg.policy = GRIDOT_POLICY_LONGEST_AXIS;
    GridotSolution *sol = NULL;
    CHECK(gridot_solve(a, b, &cfg, &sol) == GRIDOT_STATUS_OK);

    double w = 0.0;
    CHECK(gridot_solution_wasserstein(sol, &w) == GRIDOT_STATUS_OK);
    CHECK(w > 2.99 && w < 3.01);

    double x = 0.5, y = 0.0;
    CHECK(gridot_solution_evaluate(sol, &x, 1, &y) == GRIDOT_STATUS_OK);
    CHECK(y > 3.4 && y < 3.6);

    double outside = 9.0;
    CHECK(gridot_solution_evaluate(sol, &outside, 1, &y) == GRIDOT_STATUS_OUT_OF_SUPPORT);
    CHECK(strstr(gridot_last_error_message(), "outside") != NULL);

    gridot_solution_free(sol);
    gridot_samples_free(a);
    gridot_samples_free(b);
    printf("ok %.6f\n", w);
    return 0;
}
