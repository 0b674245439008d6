/* Links against the static library through the generated header. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "phcontrol.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    char msg[256];

    PhPlant *bad = NULL;
    CHECK(ph_plant_from_preset("cartpole", &bad) == PH_STATUS_CONFIG);
    CHECK(bad == NULL);
    CHECK(ph_last_error_message(msg, sizeof msg) > 0);
    CHECK(strstr(msg, "cartpole") != NULL);

    PhPlant *plant = NULL;
    CHECK(ph_plant_from_preset("ph-counterexample", &plant) == PH_STATUS_OK);
    CHECK(ph_last_error_message(msg, sizeof msg) == 0);
    size_t n = 0, m = 0;
    CHECK(ph_plant_dims(plant, &n, &m) == PH_STATUS_OK);
    CHECK(n == 2 && m == 1);

    PhValueFunction *value = NULL;
    size_t iterations = 0;
    CHECK(ph_solve_hjb(plant, 0, NULL, &value, &iterations) == PH_STATUS_OK);
    CHECK(iterations >= 1);
    double z[2] = {0.0, 0.0}, v = 1.0, grad[2];
    CHECK(ph_value_function_eval(value, z, &v, grad) == PH_STATUS_OK);
    CHECK(fabs(v) < 1e-10);

    double z0[2] = {1.0, 0.0};
    PhTrajectory *traj = NULL;
    CHECK(ph_simulate(plant, value, PH_CONTROLLER_PASSIVE, z0, 5.0, 101, &traj) == PH_STATUS_OK);
    CHECK(ph_trajectory_len(traj) == 101);
    CHECK(ph_trajectory_state_dim(traj) == 4);
    double times[101];
    CHECK(ph_trajectory_times(traj, times, 100) == PH_STATUS_BUFFER_TOO_SMALL);
    CHECK(ph_trajectory_times(traj, times, 101) == PH_STATUS_OK);
    CHECK(times[100] == 5.0);

    double a = -1.0, b = 1.0, c = 1.0, p = 0.0, residual = 1.0;
    CHECK(ph_solve_care(1, 1, 1, &a, &b, &c, &p, &residual) == PH_STATUS_OK);
    CHECK(fabs(p - (sqrt(2.0) - 1.0)) < 1e-14);

    ph_trajectory_free(traj);
    ph_value_function_free(value);
    ph_plant_free(plant);
    ph_plant_free(NULL);
    printf("phcontrol %s ok\n", ph_version());
    return 0;
}
