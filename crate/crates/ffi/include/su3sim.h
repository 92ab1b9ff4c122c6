#ifndef SU3SIM_H
#define SU3SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum Su3Status {
  SU3_STATUS_OK = 0,
  /**
   * A required pointer was null or a string was not valid UTF-8.
   */
  SU3_STATUS_INVALID_ARGUMENT = 1,
  SU3_STATUS_INVALID_PARAMS = 2,
  SU3_STATUS_DENSE_LIMIT = 3,
  SU3_STATUS_QUBIT_MISMATCH = 4,
  SU3_STATUS_NON_HERMITIAN = 5,
  SU3_STATUS_ROUTING = 6,
  SU3_STATUS_INVALID_PROBABILITY = 7,
  SU3_STATUS_CALIBRATION = 8,
  SU3_STATUS_PARSE = 9,
  SU3_STATUS_IO = 10,
  SU3_STATUS_JSON = 11,
  /**
   * A Rust panic was caught at the boundary.
   */
  SU3_STATUS_INTERNAL = 99,
} Su3Status;

/**
 * Gate-level circuit.
 */
typedef struct Su3Circuit Su3Circuit;

/**
 * Weighted sum of Pauli strings.
 */
typedef struct Su3Operator Su3Operator;

/**
 * Pure state on a small register.
 */
typedef struct Su3State Su3State;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread; do not free.
 */
const char *su3_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void su3_string_free(char *s);

/**
 * Library version as a static string; do not free.
 */
const char *su3_version(void);

/**
 * Builds the Hamiltonian described by a model JSON object such as
 * `{"n_sites":2,"m_tilde":1.2,"x":0.8,"variant":"reduced3"}`.
 *
 * # Safety
 * `params_json` must be a NUL-terminated string; `out` must be writable.
 */
enum Su3Status su3_model_hamiltonian(const char *params_json, struct Su3Operator **out);

/**
 * Particle-number observable of a model.
 *
 * # Safety
 * As for [`su3_model_hamiltonian`].
 */
enum Su3Status su3_model_particle_number(const char *params_json, struct Su3Operator **out);

/**
 * Parses an operator from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum Su3Status su3_operator_from_json(const char *json, struct Su3Operator **out);

/**
 * Serialises an operator to JSON.
 *
 * # Safety
 * `op` must be a live operator handle; `out` must be writable.
 */
enum Su3Status su3_operator_to_json(const struct Su3Operator *op, char **out);

/**
 * Number of qubits the operator acts on; 0 for a null handle.
 *
 * # Safety
 * `op` must be null or a live operator handle.
 */
size_t su3_operator_n_qubits(const struct Su3Operator *op);

/**
 * # Safety
 * `op` must be null or a handle from this library, not yet freed.
 */
void su3_operator_free(struct Su3Operator *op);

/**
 * Product state from a spin pattern: `u`/`0`/`↑` for up, `d`/`1`/`↓` for down.
 *
 * # Safety
 * `pattern` must be a NUL-terminated string; `out` must be writable.
 */
enum Su3Status su3_state_from_spins(const char *pattern, struct Su3State **out);

/**
 * `e^{−itH}|ψ⟩` as a new state.
 *
 * # Safety
 * `h` and `psi` must be live handles; `out` must be writable.
 */
enum Su3Status su3_state_evolve(const struct Su3Operator *h,
                                const struct Su3State *psi,
                                double t,
                                struct Su3State **out);

/**
 * Real expectation value `⟨ψ|O|ψ⟩`.
 *
 * # Safety
 * `psi` and `op` must be live handles; `out` must be writable.
 */
enum Su3Status su3_state_expectation(const struct Su3State *psi,
                                     const struct Su3Operator *op,
                                     double *out);

/**
 * Writes the `2^n` outcome probabilities into `buf` (qubit 1 is the most
 * significant bit of the index).
 *
 * # Safety
 * `psi` must be a live handle; `buf` must be writable for `len` doubles.
 */
enum Su3Status su3_state_probabilities(const struct Su3State *psi, double *buf, size_t len);

/**
 * # Safety
 * `psi` must be null or a handle from this library, not yet freed.
 */
void su3_state_free(struct Su3State *psi);

/**
 * Trotter circuit for a model: the dedicated layouts for `reduced3` and
 * `penta4`, per-string synthesis otherwise.
 *
 * # Safety
 * `params_json` must be a NUL-terminated string; `out` must be writable.
 */
enum Su3Status su3_circuit_trotter(const char *params_json,
                                   double dt,
                                   size_t steps,
                                   bool peephole,
                                   struct Su3Circuit **out);

/**
 * Parses a circuit from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum Su3Status su3_circuit_from_json(const char *json, struct Su3Circuit **out);

/**
 * # Safety
 * `c` must be a live circuit handle; `out` must be writable.
 */
enum Su3Status su3_circuit_to_json(const struct Su3Circuit *c, char **out);

/**
 * # Safety
 * `c` must be a live circuit handle; `out` must be writable.
 */
enum Su3Status su3_circuit_to_qasm(const struct Su3Circuit *c, char **out);

/**
 * Number of CNOT gates; 0 for a null handle.
 *
 * # Safety
 * `c` must be null or a live circuit handle.
 */
size_t su3_circuit_cnot_count(const struct Su3Circuit *c);

/**
 * Noiseless action of the circuit on a state.
 *
 * # Safety
 * `c` and `psi` must be live handles; `out` must be writable.
 */
enum Su3Status su3_circuit_run(const struct Su3Circuit *c,
                               const struct Su3State *psi,
                               struct Su3State **out);

/**
 * Samples shots from `|0…0⟩` under a noise model (JSON; null for the
 * default model) and returns counts JSON `{"shots":…,"counts":{…}}`.
 *
 * # Safety
 * `c` must be a live handle; `noise_json` null or NUL-terminated; `out` writable.
 */
enum Su3Status su3_circuit_run_noisy(const struct Su3Circuit *c,
                                     const char *noise_json,
                                     uint64_t shots,
                                     uint64_t seed,
                                     char **out);

/**
 * # Safety
 * `c` must be null or a handle from this library, not yet freed.
 */
void su3_circuit_free(struct Su3Circuit *c);

/**
 * Runs a CLI subcommand (`spectrum`, `evolve`, `trotter-circuit`,
 * `experiment`, `resources`, `fit`) on a JSON run configuration (null for
 * defaults). `input` is the CSV text for `fit` and ignored otherwise. The
 * result is a JSON object mapping output file names to their contents.
 *
 * # Safety
 * String arguments must be null or NUL-terminated (`command` is required);
 * `out` must be writable.
 */
enum Su3Status su3_run_command(const char *command,
                               const char *config_json,
                               const char *input,
                               char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SU3SIM_H */
