#ifndef NASHQEC_H
#define NASHQEC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NqecBackend {
  NQEC_BACKEND_INPUT_OUTPUT = 0,
  NQEC_BACKEND_PAPER_RANK = 1,
} NqecBackend;

typedef enum NqecCertainty {
  NQEC_CERTAINTY_EXACT = 0,
  // `d` is a lower bound: no logical below it exists.
  NQEC_CERTAINTY_LOWER_BOUND = 1,
  NQEC_CERTAINTY_HEURISTIC = 2,
} NqecCertainty;

typedef enum NqecStatus {
  NQEC_STATUS_OK = 0,
  NQEC_STATUS_NULL_POINTER = 1,
  NQEC_STATUS_INVALID_UTF8 = 2,
  NQEC_STATUS_CONFIG = 3,
  NQEC_STATUS_IO = 4,
  NQEC_STATUS_PARSE = 5,
  NQEC_STATUS_INVALID = 6,
  NQEC_STATUS_PANIC = 7,
} NqecStatus;

// Graph with inputs first, then outputs.
typedef struct NqecGraph NqecGraph;

// Result of a discovery run.
typedef struct NqecRun NqecRun;

typedef struct NqecCodeParams {
  size_t n;
  size_t k;
  size_t d;
  enum NqecCertainty certainty;
} NqecCodeParams;

typedef struct NqecNoiseResult {
  double p;
  uint64_t trials;
  uint64_t failures;
  double eps_l;
  double std_err;
} NqecNoiseResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread; do not free.
const char *nqec_last_error_message(void);

// Library version as a static string.
const char *nqec_version(void);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void nqec_string_free(char *s);

// Edgeless graph with `n_out` outputs and `n_in` inputs.
//
// # Safety
// `out` must be a valid pointer.
enum NqecStatus nqec_graph_new(size_t n_out, size_t n_in, struct NqecGraph **out);

// Parses the edge-list format: header `n_in n_out`, then one `u v` per line.
//
// # Safety
// `text` must be a nul-terminated string and `out` a valid pointer.
enum NqecStatus nqec_graph_from_edge_list(const char *text, struct NqecGraph **out);

// # Safety
// `g` must be null or a handle from this library, freed once.
void nqec_graph_free(struct NqecGraph *g);

// # Safety
// `g` must be a valid graph handle.
enum NqecStatus nqec_graph_toggle_edge(struct NqecGraph *g, size_t u, size_t v);

// # Safety
// `g` must be a valid graph handle.
enum NqecStatus nqec_graph_local_complement(struct NqecGraph *g, size_t v);

// # Safety
// `g` must be a valid graph handle and `out` a valid pointer.
enum NqecStatus nqec_graph_edge_count(const struct NqecGraph *g, size_t *out);

// Edge-list text of `g`; release with `nqec_string_free`.
//
// # Safety
// `g` must be a valid graph handle and `out` a valid pointer.
enum NqecStatus nqec_graph_to_edge_list(const struct NqecGraph *g, char **out);

// Code parameters of `g`, with the distance verified by enumerating at most
// `budget` Paulis. A budget of 0 returns the heuristic distance.
//
// # Safety
// `g` must be a valid graph handle and `out` a valid pointer.
enum NqecStatus nqec_code_params(const struct NqecGraph *g,
                                 enum NqecBackend backend_kind,
                                 uint64_t budget,
                                 struct NqecCodeParams *out);

// Preparation circuit of `g` in the text circuit format; release with
// `nqec_string_free`.
//
// # Safety
// `g` must be a valid graph handle and `out` a valid pointer.
enum NqecStatus nqec_preparation_circuit(const struct NqecGraph *g, char **out);

// Monte Carlo logical error rate under depolarizing noise. Exactly one of
// `g` (input-output code) and `fixture_name` must be non-null.
//
// # Safety
// Pointers must be null or valid; `out` must be valid.
enum NqecStatus nqec_logical_error_rate(const struct NqecGraph *g,
                                        const char *fixture_name,
                                        double p,
                                        uint64_t trials,
                                        uint64_t seed,
                                        struct NqecNoiseResult *out);

// Runs discovery trials described by a JSON run configuration.
//
// # Safety
// `config_json` must be a nul-terminated string and `out` a valid pointer.
enum NqecStatus nqec_discover(const char *config_json, struct NqecRun **out);

// # Safety
// `run` must be null or a handle from this library, freed once.
void nqec_run_free(struct NqecRun *run);

// Parameters of the best code over all trials.
//
// # Safety
// `run` must be a valid run handle and `out` a valid pointer.
enum NqecStatus nqec_run_best(const struct NqecRun *run, struct NqecCodeParams *out);

// Best graph over all trials as a new handle.
//
// # Safety
// `run` must be a valid run handle and `out` a valid pointer.
enum NqecStatus nqec_run_best_graph(const struct NqecRun *run, struct NqecGraph **out);

// Run summary as JSON; release with `nqec_string_free`.
//
// # Safety
// `run` must be a valid run handle and `out` a valid pointer.
enum NqecStatus nqec_run_summary_json(const struct NqecRun *run, char **out);

// Writes the run's report files into `dir`, which is created if needed.
//
// # Safety
// `run` must be a valid run handle and `dir` a nul-terminated string.
enum NqecStatus nqec_run_write(const struct NqecRun *run, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NASHQEC_H */
