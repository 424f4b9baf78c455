#ifndef AGGSIM_H
#define AGGSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum AggsimStatus {
  AGGSIM_STATUS_OK = 0,
  AGGSIM_STATUS_NULL_POINTER = 1,
  AGGSIM_STATUS_INVALID_ARGUMENT = 2,
  AGGSIM_STATUS_PARSE_ERROR = 3,
  AGGSIM_STATUS_INVALID_PARAMS = 4,
  /**
   * Missing or malformed ciphertexts, subgroup violations, bad inputs.
   */
  AGGSIM_STATUS_PROTOCOL_ERROR = 5,
  /**
   * The request would disclose an individual input.
   */
  AGGSIM_STATUS_INSECURE = 6,
  AGGSIM_STATUS_PANIC = 7,
} AggsimStatus;

typedef enum AggsimModel {
  AGGSIM_MODEL_AGGREGATOR = 0,
  AGGSIM_MODEL_PEERS = 1,
} AggsimModel;

typedef enum AggsimScheme {
  AGGSIM_SCHEME_BASIC = 0,
  AGGSIM_SCHEME_ADVANCED = 1,
} AggsimScheme;

/**
 * Opaque group parameters.
 */
typedef struct AggsimParams AggsimParams;

/**
 * Opaque simulation: a set of parties sharing one network.
 */
typedef struct AggsimSimulation AggsimSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or NULL.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *aggsim_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 */
void aggsim_string_free(char *s);

/**
 * Generates parameters with a `q_bits`-bit prime `q`.
 */
enum AggsimStatus aggsim_params_generate(uint64_t q_bits, uint64_t seed, struct AggsimParams **out);

/**
 * Parses the `q=.. p=.. h=.. g1=.. g2=.. M=..` text form. Validity is not
 * checked here; see [`aggsim_params_validate`].
 */
enum AggsimStatus aggsim_params_from_text(const char *s, struct AggsimParams **out);

enum AggsimStatus aggsim_params_to_text(const struct AggsimParams *params, char **out);

/**
 * Sets `*out_valid` and, when invalid, records the reasons as the last error.
 */
enum AggsimStatus aggsim_params_validate(const struct AggsimParams *params, bool *out_valid);

void aggsim_params_free(struct AggsimParams *params);

/**
 * Creates `n` participants (plus an aggregator in that model).
 */
enum AggsimStatus aggsim_simulation_new(const struct AggsimParams *params,
                                        enum AggsimModel model,
                                        uint32_t n,
                                        uint64_t seed,
                                        struct AggsimSimulation **out);

/**
 * One product session; `*out_result` receives the product in decimal.
 */
enum AggsimStatus aggsim_simulation_run_product(struct AggsimSimulation *sim,
                                                const uint64_t *values,
                                                size_t len,
                                                char **out_result);

/**
 * One sum session over all participants; result in decimal.
 */
enum AggsimStatus aggsim_simulation_run_sum(struct AggsimSimulation *sim,
                                            const uint64_t *values,
                                            size_t len,
                                            char **out_result);

/**
 * The eavesdropper's transcript so far, one message per line.
 */
enum AggsimStatus aggsim_simulation_transcript(const struct AggsimSimulation *sim, char **out);

void aggsim_simulation_free(struct AggsimSimulation *sim);

/**
 * Evaluates the polynomial in `spec_text` (the CLI spec file format) on
 * `values`; result in decimal.
 */
enum AggsimStatus aggsim_evaluate(const struct AggsimParams *params,
                                  const char *spec_text,
                                  const uint64_t *values,
                                  size_t len,
                                  enum AggsimModel model,
                                  enum AggsimScheme scheme,
                                  uint64_t seed,
                                  char **out_result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AGGSIM_H */
