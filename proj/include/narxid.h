/* SPDX-License-Identifier: Apache-2.0
 *
 * narxid - nonlinear (NARX) system identification toolkit.
 *
 * C API of the shared library. Objects are opaque handles created and
 * destroyed by the library; every fallible call returns a status code and
 * leaves a thread-local message retrievable with narxid_last_error().
 * Structured options are passed as JSON strings (see README for the
 * schemas); strings returned through char** are owned by the caller and
 * must be released with narxid_string_free().
 */

#ifndef NARXID_H
#define NARXID_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum narxid_status {
  NARXID_OK = 0,
  NARXID_ERR_USAGE = 1,   /* invalid arguments or configuration */
  NARXID_ERR_DATA = 2,    /* missing or malformed files / datasets */
  NARXID_ERR_NUMERIC = 3  /* numerical failure (singular system, diverged) */
} narxid_status;

/* Dataset bundle: train / validation / white test / colored test. */
typedef struct narxid_experiment narxid_experiment;

/* A trained model: FIR coefficient vector or NARX network. */
typedef struct narxid_model narxid_model;

const char* narxid_version(void);

/* Message for the last failing call on this thread ("" if none). */
const char* narxid_last_error(void);

/* Benchmark data generation. options_json may be NULL for the defaults;
 * recognized keys: n_train_record, n_test, sigma_v, train_band_fraction,
 * white_band_fraction, colored_band_fraction. */
narxid_status narxid_experiment_generate(uint64_t seed, const char* options_json,
                                         narxid_experiment** out);
narxid_status narxid_experiment_save(const narxid_experiment* exp, const char* dir);
narxid_status narxid_experiment_load(const char* dir, narxid_experiment** out);
void narxid_experiment_free(narxid_experiment* exp);

/* Model estimation. spec_json keys:
 *   kind: "lti" | "es" | "dr" | "noe"
 *   case: "hmo" | "omo"            (or explicit q / n_a / n_b overrides)
 *   seed, max_epochs, patience, batch_size,
 *   adam: {lr, beta1, beta2, eps},
 *   reg:  {alpha, gamma, t_steps, anchor_stride}   (dr only)
 * On success *out_report_json (if non-NULL) receives the training report. */
narxid_status narxid_train(const narxid_experiment* exp, const char* spec_json,
                           narxid_model** out_model, char** out_report_json);

/* Grid search over reg hyperparameters; spec_json additionally takes
 * alpha_grid / gamma_grid (arrays) and threads. */
narxid_status narxid_grid_search(const narxid_experiment* exp, const char* spec_json,
                                 narxid_model** out_model, char** out_report_json);

narxid_status narxid_model_save(const narxid_model* model, const char* path);
narxid_status narxid_model_load(const char* path, narxid_model** out);
void narxid_model_free(narxid_model* model);

/* NRMSE records (JSON array) for the model on the bundle's train/white/
 * colored sets, in one-step and free-run simulation modes. */
narxid_status narxid_evaluate(const narxid_model* model, const narxid_experiment* exp,
                              char** out_records_json);

/* Full benchmark reproduction. options_json keys: scale ("desk"|"full"),
 * master_seed, plus any profile override (runs, cases, max_epochs, patience,
 * t_steps, anchor_stride, alpha_grid, gamma_grid, threads, data{...}).
 * Writes the result bundle into out_dir; *out_summary_json (if non-NULL)
 * receives the rendered summary tables. */
narxid_status narxid_reproduce(const char* options_json, const char* out_dir,
                               char** out_summary_json);

void narxid_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* NARXID_H */
