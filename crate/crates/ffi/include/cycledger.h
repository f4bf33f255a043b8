#ifndef CYCLEDGER_H
#define CYCLEDGER_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Text outputs of a finished simulation.
 */
typedef enum CycOutput {
  CYC_OUTPUT_CHAIN_DUMP = 0,
  CYC_OUTPUT_METRICS_CSV = 1,
  CYC_OUTPUT_MESSAGES_CSV = 2,
  CYC_OUTPUT_REPUTATION_CSV = 3,
} CycOutput;

/**
 * Status codes returned by every fallible function.
 */
typedef enum CycStatus {
  CYC_STATUS_OK = 0,
  CYC_STATUS_NULL_POINTER = 1,
  CYC_STATUS_INVALID_UTF8 = 2,
  CYC_STATUS_CONFIG = 3,
  CYC_STATUS_DOMAIN = 4,
  CYC_STATUS_SIMULATION = 5,
} CycStatus;

/**
 * A finished simulation run.
 */
typedef struct CycSim CycSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last error on this thread, or an empty string. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *cyc_last_error(void);

/**
 * Runs a simulation described by `config_text` (flat `key = value` lines,
 * may be empty) with the given seed and stores a new handle in `out`.
 *
 * # Safety
 * `config_text` must be NULL or a valid NUL-terminated string, and `out`
 * must be NULL or point to writable storage for one pointer.
 */
enum CycStatus cyc_sim_run(const char *config_text, uint64_t seed, struct CycSim **out);

/**
 * Number of simulated rounds, or 0 for a NULL handle.
 *
 * # Safety
 * `sim` must be NULL or a handle from [`cyc_sim_run`] not yet freed.
 */
uint64_t cyc_sim_rounds(const struct CycSim *sim);

/**
 * Number of rounds that released a block, or 0 for a NULL handle.
 *
 * # Safety
 * As for [`cyc_sim_rounds`].
 */
uint64_t cyc_sim_blocks(const struct CycSim *sim);

/**
 * Borrowed NUL-terminated text owned by the handle, or NULL for a NULL
 * handle. Valid until [`cyc_sim_free`].
 *
 * # Safety
 * As for [`cyc_sim_rounds`].
 */
const char *cyc_sim_output(const struct CycSim *sim, enum CycOutput which);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `sim` must be NULL or a handle from [`cyc_sim_run`] not yet freed.
 */
void cyc_sim_free(struct CycSim *sim);

/**
 * Probability that a committee of `c` drawn from `n` nodes, `t` of them
 * corrupted, holds at least half corrupted members.
 *
 * # Safety
 * `out` must be NULL or point to a writable double.
 */
enum CycStatus cyc_hypergeom_tail(uint64_t n, uint64_t t, uint64_t c, double *out);

/**
 * e^(-c/12).
 */
double cyc_chernoff_bound(double c);

/**
 * f^lambda for a partial set whose members are each corrupted with
 * probability `f`.
 *
 * # Safety
 * `out` must be NULL or point to a writable double.
 */
enum CycStatus cyc_partial_set_failure(double f, uint32_t lambda, double *out);

/**
 * m(e^(-c/12) + (1/3)^lambda).
 */
double cyc_round_failure(uint32_t m, double c, uint32_t lambda);

/**
 * Empirical committee failure rate over `trials` seeded samples.
 *
 * # Safety
 * `out` must be NULL or point to a writable double.
 */
enum CycStatus cyc_monte_carlo_committee(uint64_t n,
                                         uint64_t t,
                                         uint64_t c,
                                         uint64_t trials,
                                         uint64_t seed,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CYCLEDGER_H */
