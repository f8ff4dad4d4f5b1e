/* Stable C interface to the gafds library.
 *
 * Objects are opaque handles released with their *_free function. Every
 * fallible call returns a gafds_status; on failure gafds_last_error() holds a
 * message for the calling thread. Strings handed out through char** outputs
 * are owned by the caller and released with gafds_string_free().
 *
 * Option arguments are JSON objects; unknown keys are rejected. NULL or ""
 * means "all defaults".
 */
#ifndef GAFDS_GAFDS_H
#define GAFDS_GAFDS_H

#include <stddef.h>
#include <stdint.h>

#if defined(GAFDS_BUILDING_LIBRARY)
#define GAFDS_API __attribute__((visibility("default")))
#else
#define GAFDS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gafds_status {
  GAFDS_OK = 0,
  GAFDS_INVALID_ARGUMENT = 1,
  GAFDS_IO = 2,
  GAFDS_PARSE = 3,
  GAFDS_NUMERIC = 4,
  GAFDS_INTERNAL = 5
} gafds_status;

typedef struct gafds_dataset gafds_dataset;
typedef struct gafds_features gafds_features;

GAFDS_API const char* gafds_version(void);
GAFDS_API const char* gafds_status_name(gafds_status status);
/* Message of the last failed call on this thread; "" if none. */
GAFDS_API const char* gafds_last_error(void);
GAFDS_API void gafds_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

/* sample_rate <= 0 selects the Bonn default of 173.61 Hz. */
GAFDS_API gafds_status gafds_dataset_load_bonn(const char* dir, const char* label, double sample_rate,
                                               gafds_dataset** out);
GAFDS_API gafds_status gafds_dataset_load_csv(const char* path, gafds_dataset** out);
GAFDS_API gafds_status gafds_dataset_save_csv(const gafds_dataset* ds, const char* path);
GAFDS_API gafds_status gafds_dataset_csv(const gafds_dataset* ds, char** csv);
/* Appends a copy of every record of src to dst. */
GAFDS_API gafds_status gafds_dataset_append(gafds_dataset* dst, const gafds_dataset* src);
/* spec_json: {"length", "sample_rate", "classes": [{"label", "count", "noise_sigma", "tones": [{"hz", "amplitude"}]}]}.
 * seed is the master seed; the same stream as the pipeline's synth stage is used. */
GAFDS_API gafds_status gafds_dataset_synthesize(const char* spec_json, uint64_t seed, gafds_dataset** out);
/* groups_json: {"CD": ["C", "D"], "E": ["E"]}; records outside every group are dropped. */
GAFDS_API gafds_status gafds_dataset_regroup(const gafds_dataset* ds, const char* groups_json, gafds_dataset** out);
GAFDS_API gafds_status gafds_dataset_size(const gafds_dataset* ds, size_t* records);
GAFDS_API void gafds_dataset_free(gafds_dataset* ds);

/* ---- spectra ------------------------------------------------------------- */

/* `bin,hz,magnitude` for one record; source is "fourier" or "hilbert_envelope". */
GAFDS_API gafds_status gafds_spectrum_csv(const gafds_dataset* ds, const char* record_id, const char* source,
                                          char** csv);
/* `q,h_q,D_q` multifractal spectrum of one record. */
GAFDS_API gafds_status gafds_mfdfa_csv(const gafds_dataset* ds, const char* record_id, char** csv);

/* ---- frequency-interval search and feature extraction -------------------- */

/* options: {"alpha", "spectrum_source", "seed", "threads", "ga": {...}} */
GAFDS_API gafds_status gafds_search(const gafds_dataset* ds, const char* options_json, char** result_json);
/* options: {"nonlinear": true, "nonlinear_options": {"sampen": {...}, "lle_dfa_input"}, "threads"} */
GAFDS_API gafds_status gafds_extract(const gafds_dataset* ds, const char* search_json, const char* options_json,
                                     gafds_features** out);

GAFDS_API gafds_status gafds_features_load_csv(const char* path, gafds_features** out);
GAFDS_API gafds_status gafds_features_save_csv(const gafds_features* f, const char* path);
GAFDS_API gafds_status gafds_features_csv(const gafds_features* f, char** csv);
GAFDS_API gafds_status gafds_features_shape(const gafds_features* f, size_t* rows, size_t* cols);
/* names_json: array of column names, kept in the given order. */
GAFDS_API gafds_status gafds_features_select(const gafds_features* f, const char* names_json, gafds_features** out);
GAFDS_API void gafds_features_free(gafds_features* f);

/* ---- selection, evaluation, ratios ----------------------------------------- */

/* options: {"seed", "threads", "selection": {...}} */
GAFDS_API gafds_status gafds_select(const gafds_features* f, const char* options_json, char** mask_json);
/* options: {"task", "seed", "threads", "folds": [2, 5, 10], "classifiers": [...], "normalize"}.
 * Either output may be NULL. */
GAFDS_API gafds_status gafds_evaluate(const gafds_features* f, const char* options_json, char** report_json,
                                      char** report_csv);
/* subset_json: array of column names, or NULL for every column. */
GAFDS_API gafds_status gafds_ratios_csv(const gafds_features* f, const char* subset_json, int normalized, char** csv);

/* ---- full pipeline ---------------------------------------------------------- */

/* threads == 0 uses every core; results do not depend on it. */
GAFDS_API gafds_status gafds_run_pipeline(const char* config_json, const char* out_dir, unsigned threads,
                                          char** manifest_json);

#ifdef __cplusplus
}
#endif

#endif /* GAFDS_GAFDS_H */
