#include <math.h>
#include <stdio.h>
#include "invscheme.h"

#define EXPECT(cond)                                             \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "failed: %s (line %d)\n", #cond, __LINE__); \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    double v;
    EXPECT(inv_cross_ratio_same(1.0, 0.5, 1.0 / 3.0, 0.25, &v) == INV_STATUS_OK);
    EXPECT(fabs(v - 4.0) < 1e-12);
    EXPECT(inv_k_from_c(2.0, 0.01) == 4.0);

    InvTrajectory *tr = NULL;
    EXPECT(inv_trajectory_ode2_exact(1.0, 2.0, 2.0, 0.01, 15.0, 0, 12, &tr) == INV_STATUS_OK);
    EXPECT(inv_trajectory_len(tr) == 13);

    InvSchemeParams p = {2.0, 0.01, inv_theta_exact(2.0, 0.01), 4.0};
    double scheme, mesh, mean, drift;
    EXPECT(inv_ode2_max_residuals(tr, &p, &scheme, &mesh) == INV_STATUS_OK);
    EXPECT(scheme < 1e-10 && mesh < 1e-12);
    EXPECT(inv_integral_report(tr, INV_INTEGRAL_J4, &p, &mean, &drift) == INV_STATUS_OK);
    EXPECT(fabs(mean - 15.0) < 1e-9);

    int64_t n;
    double x, u;
    EXPECT(inv_trajectory_get(tr, 99, &n, &x, &u) == INV_STATUS_INDEX);
    EXPECT(inv_last_error_message()[0] != '\0');
    inv_trajectory_free(tr);

    EXPECT(inv_trajectory_ode2_exact(1.0, 2.0, 3.0, 0.01, 15.0, 0, 12, &tr) == INV_STATUS_INVALID_PARAMETER);
    EXPECT(inv_schwarzian(1.0, 0.0, 0.0, NULL) == INV_STATUS_NULL_POINTER);
    puts("ok");
    return 0;
}
