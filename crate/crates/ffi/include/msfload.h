#ifndef MSFLOAD_H
#define MSFLOAD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum MsfStatus {
  MSF_STATUS_OK = 0,
  // A required pointer argument was null.
  MSF_STATUS_NULL_POINTER = 1,
  // An argument was out of range or malformed (including bad JSON or UTF-8).
  MSF_STATUS_INVALID_ARGUMENT = 2,
  // Input data was unusable: non-finite values, length mismatches, zero variance.
  MSF_STATUS_INVALID_DATA = 3,
  // Input columns do not match the model's training schema.
  MSF_STATUS_SCHEMA_MISMATCH = 4,
  // A model could not be trained.
  MSF_STATUS_TRAINING_FAILED = 5,
  // A file could not be read or written.
  MSF_STATUS_IO = 6,
  // An internal panic was caught.
  MSF_STATUS_PANIC = 7,
} MsfStatus;

// Feature scaling used by the variance gate of feature selection.
typedef enum MsfScaling {
  MSF_SCALING_RAW = 0,
  MSF_SCALING_MIN_MAX = 1,
} MsfScaling;

// Opaque handle to a trained model.
typedef struct MsfModel MsfModel;

// Forecast accuracy metrics.
typedef struct MsfMetrics {
  double mae;
  // Percent.
  double mape;
  double rmse;
  size_t n;
} MsfMetrics;

// Message describing the most recent failure on this thread, or null if
// none. The pointer stays valid until the next failing call on the same
// thread; do not free it.
const char *msf_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *msf_version(void);

// Release a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a pointer previously returned by this library and
// not yet freed.
void msf_string_free(char *s);

// MAE, MAPE (percent) and RMSE of `yhat` against `y`, both of length `n`.
//
// # Safety
// `y` and `yhat` must point to `n` readable doubles; `out` must be writable.
enum MsfStatus msf_metrics(const double *y, const double *yhat, size_t n, struct MsfMetrics *out);

// Solar zenith and azimuth (degrees; azimuth clockwise from north) at a
// unix time for a site at `latitude`/`longitude` degrees (east positive).
//
// # Safety
// `out_zenith` and `out_azimuth` must be writable.
enum MsfStatus msf_solar_position(double latitude,
                                  double longitude,
                                  double unix_seconds,
                                  double *out_zenith,
                                  double *out_azimuth);

// Clear-sky global horizontal irradiance (W/m²) at a solar zenith angle in
// degrees; zero when the sun is below the horizon.
double msf_clear_sky_ghi(double zenith_deg);

// Variance-gated, F-score-ranked feature selection. Writes the indices of
// the kept columns, best first, to `out_indices` (capacity `n_cols`) and
// their number to `out_count`.
//
// # Safety
// `x` must hold `n_rows * n_cols` doubles, `y` `n_rows` doubles and
// `out_indices` room for `n_cols` indices; `out_count` must be writable.
enum MsfStatus msf_select_features(const double *x,
                                   size_t n_rows,
                                   size_t n_cols,
                                   const double *y,
                                   double variance_threshold,
                                   size_t k,
                                   enum MsfScaling scaling,
                                   size_t *out_indices,
                                   size_t *out_count);

// Train a model. `config_json` selects the kind and hyperparameters, e.g.
// `{"kind":"gbrt","n_trees":200}`; omitted fields take their defaults.
// `feature_names` may be null, in which case columns are named `x0`, `x1`, ….
//
// # Safety
// `x` must hold `n_rows * n_cols` doubles, `y` `n_rows` doubles,
// `feature_names` null or `n_cols` NUL-terminated strings; `out_model`
// must be writable.
enum MsfStatus msf_model_train(const char *config_json,
                               const double *x,
                               size_t n_rows,
                               size_t n_cols,
                               const double *y,
                               const char *const *feature_names,
                               struct MsfModel **out_model);

// Predict `n_rows` rows into `out` (length `n_rows`). Columns must be in
// training order.
//
// # Safety
// `model` must be a live handle, `x` must hold `n_rows * n_cols` doubles and
// `out` room for `n_rows` doubles.
enum MsfStatus msf_model_predict(const struct MsfModel *model,
                                 const double *x,
                                 size_t n_rows,
                                 size_t n_cols,
                                 double *out);

// Number of input columns the model was trained on (0 for a null handle).
//
// # Safety
// `model` must be null or a live handle.
size_t msf_model_n_features(const struct MsfModel *model);

// Model kind as a static string (`"svr"`, `"gbrt"`, `"mlp"`), or null for a
// null handle.
//
// # Safety
// `model` must be null or a live handle.
const char *msf_model_kind(const struct MsfModel *model);

// Serialize the model to JSON; release the result with [`msf_string_free`].
//
// # Safety
// `model` must be a live handle; `out_json` must be writable.
enum MsfStatus msf_model_to_json(const struct MsfModel *model, char **out_json);

// Rebuild a model from JSON produced by [`msf_model_to_json`].
//
// # Safety
// `json` must be a NUL-terminated string; `out_model` must be writable.
enum MsfStatus msf_model_from_json(const char *json, struct MsfModel **out_model);

// Write the model to a file.
//
// # Safety
// `model` must be a live handle; `path` a NUL-terminated UTF-8 path.
enum MsfStatus msf_model_save(const struct MsfModel *model, const char *path);

// Read a model written by [`msf_model_save`].
//
// # Safety
// `path` must be a NUL-terminated UTF-8 path; `out_model` must be writable.
enum MsfStatus msf_model_load(const char *path, struct MsfModel **out_model);

// Release a model handle. Null is ignored.
//
// # Safety
// `model` must be null or a handle from this library that has not been
// freed.
void msf_model_free(struct MsfModel *model);

// Partial dependence of the model on column `feature_index` over
// up to `grid_points` values spanning the column's 1st–99th percentile in
// `x` (duplicates collapse, so fewer points are possible). Writes the grid
// to `out_grid`, the mean predictions to `out_response` and the number of
// points written to `out_count`.
//
// # Safety
// `model` must be a live handle, `x` must hold `n_rows * n_cols` doubles,
// both outputs need room for `grid_points` doubles and `out_count` must be
// writable.
enum MsfStatus msf_partial_dependence(const struct MsfModel *model,
                                      const double *x,
                                      size_t n_rows,
                                      size_t n_cols,
                                      size_t feature_index,
                                      size_t grid_points,
                                      double *out_grid,
                                      double *out_response,
                                      size_t *out_count);

// Pearson correlation between `load[t]` and `feature[t - d]` for each lag
// d = 0..=max_lag, written to `out_r` (length `max_lag + 1`); the lag with
// the largest |r| goes to `out_best_lag`.
//
// # Safety
// `feature` and `load` must hold `n` doubles, `out_r` room for
// `max_lag + 1` doubles; `out_best_lag` must be writable.
enum MsfStatus msf_lag_scan(const double *feature,
                            const double *load,
                            size_t n,
                            size_t max_lag,
                            double *out_r,
                            size_t *out_best_lag);

#endif  /* MSFLOAD_H */
