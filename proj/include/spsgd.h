/* C interface to the stochastically preconditioned SGD toolkit.
 *
 * Conventions:
 *   - Every function returning int yields a status code (SPSGD_OK on
 *     success); on failure spsgd_last_error() describes what went wrong for
 *     the calling thread.
 *   - Strings handed back through char** out-parameters are heap-allocated;
 *     release them with spsgd_string_free().
 *   - Handles are opaque; create with the config constructors, destroy with
 *     spsgd_config_free().
 */
#ifndef SPSGD_H
#define SPSGD_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum spsgd_status {
  SPSGD_OK = 0,
  SPSGD_ERR_ARGUMENT = 1, /* bad parameter or unusable configuration */
  SPSGD_ERR_PARSE = 2,    /* config text is not valid JSON */
  SPSGD_ERR_SCHEMA = 3,   /* JSON is valid but violates the config schema */
  SPSGD_ERR_IO = 4,       /* file could not be read or written */
  SPSGD_ERR_INTERNAL = 5  /* unexpected failure */
};

typedef struct spsgd_config spsgd_config;

/* Library version string; storage is static, do not free. */
const char* spsgd_version(void);

/* Message for the most recent failure on this thread ("" if none);
 * storage is thread-local, do not free. */
const char* spsgd_last_error(void);

/* Releases a string returned through a char** out-parameter. */
void spsgd_string_free(char* s);

/* --- configuration ------------------------------------------------------ */

/* Parses a JSON experiment description.  Unknown keys are rejected; the
 * error message names the offending key or field path, and for malformed
 * JSON it carries line/column. */
int spsgd_config_parse(const char* json_text, spsgd_config** out);

/* Reads the file at `path` and parses it as above. */
int spsgd_config_load(const char* path, spsgd_config** out);

void spsgd_config_free(spsgd_config* cfg);

/* Overrides the config's base seed (e.g. from a CLI flag). */
int spsgd_config_set_seed(spsgd_config* cfg, uint64_t seed);

/* Canonical serialization: sorted keys, defaults materialized. */
int spsgd_config_canonical_json(const spsgd_config* cfg, char** out_text);

/* Hex digest of the canonical serialization; names output directories. */
int spsgd_config_digest(const spsgd_config* cfg, char** out_text);

/* Output directory recorded in the config (the default for runs). */
int spsgd_config_output_dir(const spsgd_config* cfg, char** out_text);

/* --- operations ---------------------------------------------------------
 * `format` selects the rendering of *out_text: "csv" or "json" (NULL means
 * "json").  `out_root` semantics: NULL uses the config's output_dir, ""
 * disables file output entirely, anything else is used as the root; files
 * land under <out_root>/<config digest>/.  `out_dir` (when non-NULL)
 * receives the realized directory ("" if file output was disabled). */

/* Runs the experiment grid (horizons x repetitions) with up to `jobs`
 * concurrent runs; the merged result is independent of `jobs`. */
int spsgd_run_experiment(const spsgd_config* cfg, int jobs,
                         const char* out_root, const char* format,
                         char** out_text, char** out_dir);

/* Runs the grid and fits the log-log decay slope of the mean-gradient
 * metric against the horizon; requires at least four horizons. */
int spsgd_rates_report(const spsgd_config* cfg, int jobs,
                       const char* out_root, const char* format,
                       char** out_text, char** out_dir);

/* Runs a named check suite: "scalar", "burkholder", "example1", "epsilon"
 * or "all".  *all_pass (when non-NULL) is set to 1 iff every check passed. */
int spsgd_verify_suite(const char* which, uint64_t seed, const char* format,
                       char** out_text, int* all_pass);

/* Runs the canonical clipping-vs-normalization demonstration, writing
 * trajectories, a report and an SVG beneath `out_dir` ("" disables file
 * output).  *all_pass (when non-NULL) is set to 1 iff every check passed. */
int spsgd_separation_demo(const char* out_dir, uint64_t seed, int jobs,
                          const char* format, char** out_text, int* all_pass);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SPSGD_H */
