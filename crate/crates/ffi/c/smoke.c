/* Runs one fixed-parameter episode through the C interface.
 * Build: cc smoke.c -I../include -L<target>/release -lqasal_ffi -lm -lpthread -ldl
 */
#include <stdio.h>
#include "qasal.h"

int main(void) {
    QasalEnv *env = NULL;
    if (qasal_env_new("[env]\ncr_lbt = true\nepisode_steps = 20", 1, &env) != QASAL_STATUS_OK) {
        fprintf(stderr, "env: %s\n", qasal_last_error_message());
        return 1;
    }
    size_t dim = 0;
    qasal_env_observation_dim(env, &dim);
    double obs[64];
    qasal_env_reset(env, 1, 0.0, obs, 64);
    QasalStep step;
    do {
        if (qasal_env_step_fixed(env, obs, 64, &step) != QASAL_STATUS_OK) {
            fprintf(stderr, "step: %s\n", qasal_last_error_message());
            return 1;
        }
    } while (!step.done);
    printf("qasal %s: %u steps, jfi %.3f, smoothed delay %.0f us, obs dim %zu\n",
           qasal_version(), step.step, step.f0, step.f1, dim);
    qasal_env_free(env);
    return 0;
}
