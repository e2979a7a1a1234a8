/*
 * Copyright 2026 The qtomo authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the qtomo quantum state tomography simulator.
 *
 * Every function returns a qtomo_status; QTOMO_OK means success and any
 * other value leaves a human-readable message in qtomo_last_error()
 * (thread local). Objects are opaque handles released with the matching
 * _free function. Strings returned through char** are heap allocated and
 * released with qtomo_string_free.
 */

#ifndef QTOMO_H
#define QTOMO_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qtomo_status {
  QTOMO_OK = 0,
  QTOMO_ERR_INVALID_ARGUMENT = 1, /* bad parameter or malformed input */
  QTOMO_ERR_DIMENSION = 2,        /* dimension mismatch / unsupported dim */
  QTOMO_ERR_DOMAIN = 3,           /* value outside the mathematical domain */
  QTOMO_ERR_CONFIG = 4,           /* config file rejected */
  QTOMO_ERR_RUNTIME = 5           /* I/O or internal failure */
} qtomo_status;

const char* qtomo_version(void);

/* Message for the most recent failure on this thread ("" if none). */
const char* qtomo_last_error(void);

void qtomo_string_free(char* s);

/* ---- density matrix handles -------------------------------------------- */

typedef struct qtomo_state qtomo_state;

/* elements: row-major re,im pairs, 2*dim*dim doubles. The matrix must be
 * Hermitian, unit trace and positive semidefinite within tolerance. */
qtomo_status qtomo_state_create(int dim, const double* elements,
                                qtomo_state** out);

/* Qubit state from a Bloch vector with |s| <= 1. */
qtomo_status qtomo_state_from_bloch(double s1, double s2, double s3,
                                    qtomo_state** out);

void qtomo_state_free(qtomo_state* state);

qtomo_status qtomo_state_dim(const qtomo_state* state, int* out);

/* Writes 2*dim*dim doubles (row-major re,im pairs). */
qtomo_status qtomo_state_elements(const qtomo_state* state, double* out);

qtomo_status qtomo_state_purity(const qtomo_state* state, double* out);

qtomo_status qtomo_fidelity(const qtomo_state* a, const qtomo_state* b,
                            double* out);
qtomo_status qtomo_bures_distance(const qtomo_state* a, const qtomo_state* b,
                                  double* out);
qtomo_status qtomo_bures_angle(const qtomo_state* a, const qtomo_state* b,
                               double* out);
qtomo_status qtomo_trace_distance(const qtomo_state* a, const qtomo_state* b,
                                  double* out);
qtomo_status qtomo_hs_distance(const qtomo_state* a, const qtomo_state* b,
                               double* out);
/* +infinity when the supports are incompatible. */
qtomo_status qtomo_relative_entropy(const qtomo_state* a,
                                    const qtomo_state* b, double* out);

/* ---- random states ------------------------------------------------------ */

/* kind: "bures_uniform" | "hs_uniform" | "haar_pure". Writes `count`
 * states in the particle snapshot text format (weight 1/count each). */
qtomo_status qtomo_sample_prior(const char* kind, int dim, long count,
                                unsigned long long seed, const char* path);

/* ---- theoretical bounds -------------------------------------------------- */

/* Fills gill_massar[count]; for dim 2 also massar_popescu[count] and
 * collective_mixed[count] when non-NULL (they must be NULL for dim 4). */
qtomo_status qtomo_bounds(int dim, const long* n_values, int count,
                          double* gill_massar, double* massar_popescu,
                          double* collective_mixed);

/* ---- scaling fits --------------------------------------------------------- */

/* Fits mean infidelity vs N from a results CSV over [n_lo, n_hi] and
 * returns a JSON report. */
qtomo_status qtomo_fit_csv(const char* csv_path, long n_lo, long n_hi,
                           char** json_report);

/* ---- simulation runs ------------------------------------------------------ */

/* Runs the experiment described by the config file and writes results.csv,
 * summary.json and manifest.json into out_dir.
 *   seed_override: >= 0 replaces the config seed; < 0 keeps it.
 *   workers:       >= 1 replaces the config worker count; 0 keeps it.
 *   emit_timing:   nonzero fills the CSV seconds column (breaks
 *                  byte-identical reruns by choice).
 * On success *manifest_json (when non-NULL) receives the manifest. */
qtomo_status qtomo_run_simulation(const char* config_path, const char* out_dir,
                                  long long seed_override, int workers,
                                  int emit_timing, char** manifest_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* QTOMO_H */
