/* Builds the tetraquark Hamiltonian, evolves the baryonium state and
 * compiles a two-step Trotter circuit through the C ABI. */
#include <stdio.h>
#include "su3sim.h"

static int check(Su3Status s, const char *what) {
    if (s != SU3_STATUS_OK) {
        const char *msg = su3_last_error_message();
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, msg ? msg : "");
        return 1;
    }
    return 0;
}

int main(void) {
    const char *params = "{\"n_sites\":2,\"m_tilde\":1.2,\"x\":0.8,\"variant\":\"reduced3\"}";
    Su3Operator *h = NULL, *n = NULL;
    Su3State *psi = NULL, *later = NULL;
    Su3Circuit *c = NULL;
    double n0 = 0.0, n1 = 0.0;

    if (check(su3_model_hamiltonian(params, &h), "hamiltonian")) return 1;
    if (check(su3_model_particle_number(params, &n), "particle number")) return 1;
    if (check(su3_state_from_spins("ddd", &psi), "state")) return 1;
    if (check(su3_state_expectation(psi, n, &n0), "expectation")) return 1;
    if (check(su3_state_evolve(h, psi, 1.0, &later), "evolve")) return 1;
    if (check(su3_state_expectation(later, n, &n1), "expectation")) return 1;
    if (check(su3_circuit_trotter(params, 0.25, 2, true, &c), "circuit")) return 1;

    printf("N(0)=%.6f N(1)=%.6f cnots=%zu\n", n0, n1, su3_circuit_cnot_count(c));

    if (su3_state_from_spins("dxd", &psi) == SU3_STATUS_OK) return 1;
    printf("rejected: %s\n", su3_last_error_message());

    su3_circuit_free(c);
    su3_state_free(later);
    su3_state_free(psi);
    su3_operator_free(n);
    su3_operator_free(h);
    return 0;
}
