/* rezrl - adaptive-resolution VQA policy-training simulator.
 *
 * C interface to the core library: opaque handles, integer status codes, and
 * a thread-local error message. All functions return REZRL_OK on success.
 */
#ifndef REZRL_H
#define REZRL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rezrl_status {
  REZRL_OK = 0,
  REZRL_ERR_INVALID_ARGUMENT = 1,
  REZRL_ERR_CONFIG = 2,
  REZRL_ERR_IO = 3,
  REZRL_ERR_INSUFFICIENT_SAMPLES = 4,
  REZRL_ERR_INTERNAL = 5,
} rezrl_status;

typedef struct rezrl_config rezrl_config;
typedef struct rezrl_run rezrl_run;

const char* rezrl_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
const char* rezrl_last_error(void);

/* ---- configuration ----------------------------------------------------- */

/* Desk-scale defaults. */
rezrl_status rezrl_config_create(rezrl_config** out);

/* Flat key/value file plus REZRL_* environment overrides. */
rezrl_status rezrl_config_load(const char* path, rezrl_config** out);

rezrl_status rezrl_config_set(rezrl_config* cfg, const char* key, const char* value);

/* Writes the value into buf (NUL-terminated, truncated to cap). */
rezrl_status rezrl_config_get(const rezrl_config* cfg, const char* key, char* buf, size_t cap);

void rezrl_config_free(rezrl_config* cfg);

/* ---- experiments ------------------------------------------------------- */

/* Runs the full training loop; deterministic for a given config. */
rezrl_status rezrl_run_experiment(const rezrl_config* cfg, rezrl_run** out);

size_t rezrl_run_step_count(const rezrl_run* run);

rezrl_status rezrl_run_write_metrics_jsonl(const rezrl_run* run, const char* path);
rezrl_status rezrl_run_write_metrics_csv(const rezrl_run* run, const char* path);
rezrl_status rezrl_run_write_report_json(const rezrl_run* run, const char* path);
rezrl_status rezrl_run_write_params_json(const rezrl_run* run, const char* path);

/* Per-episode outcomes of the final-policy evaluation pass, one JSON row each. */
rezrl_status rezrl_run_write_outcomes_jsonl(const rezrl_run* run, const char* path);

/* Final-step behavior metrics; any output pointer may be NULL. */
rezrl_status rezrl_run_final_metrics(const rezrl_run* run, double* resize_ratio,
                                     double* accuracy, double* mean_reward);

void rezrl_run_free(rezrl_run* run);

/* ---- dataset classification -------------------------------------------- */

/* Rollout-based sample classification over dataprep_tasks sampled tasks;
 * writes the balanced labeled set as JSONL and reports per-class counts. */
rezrl_status rezrl_classify_dataset(const rezrl_config* cfg, const char* out_jsonl_path,
                                    size_t* n_low_res_solvable, size_t* n_high_res_required);

/* ---- reporting ---------------------------------------------------------- */

/* Renders a human-readable summary of a metrics JSONL file; the returned
 * string must be released with rezrl_string_free. */
rezrl_status rezrl_report_metrics(const char* metrics_jsonl_path, char** out_text);

void rezrl_string_free(char* text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* REZRL_H */
