//! C ABI over the msfload toolkit.
//!
//! Conventions:
//! - every fallible function returns an [`MsfStatus`]; on failure a
//!   human-readable message is available from [`msf_last_error_message`]
//!   on the same thread until the next failing call;
//! - matrices are dense, row-major `double` buffers of `n_rows * n_cols`;
//! - models are opaque [`MsfModel`] handles released with [`msf_model_free`];
//! - strings returned by the library are released with [`msf_string_free`].
//!
//! Panics never cross the boundary: they are caught and reported as
//! [`MsfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use msfload::astro::{self, GeoLocation};
use msfload::evaluation::MetricReport;
use msfload::interpret::{self, GridSpec};
use msfload::models::{self, ModelConfig, TrainedModel};
use msfload::selection::{self, Scaling, SelectionConfig};
use msfload::timeseries::{FeatureAspect, FeatureMatrix};
use msfload::Error;
use ndarray::ArrayView2;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MsfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range or malformed (including bad JSON or UTF-8).
    InvalidArgument = 2,
    /// Input data was unusable: non-finite values, length mismatches, zero variance.
    InvalidData = 3,
    /// Input columns do not match the model's training schema.
    SchemaMismatch = 4,
    /// A model could not be trained.
    TrainingFailed = 5,
    /// A file could not be read or written.
    Io = 6,
    /// An internal panic was caught.
    Panic = 7,
}

/// Feature scaling used by the variance gate of feature selection.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MsfScaling {
    Raw = 0,
    MinMax = 1,
}

/// Forecast accuracy metrics.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MsfMetrics {
    pub mae: f64,
    /// Percent.
    pub mape: f64,
    pub rmse: f64,
    pub n: usize,
}

/// Opaque handle to a trained model.
pub struct MsfModel {
    inner: TrainedModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(MsfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parameter(_) | Error::Config(_) | Error::Catalog(_) | Error::UnknownFeature(_) | Error::Split(_) => {
                MsfStatus::InvalidArgument
            }
            Error::Schema(_) => MsfStatus::SchemaMismatch,
            Error::Training(_) => MsfStatus::TrainingFailed,
            Error::Io(_) | Error::File { .. } | Error::Parse { .. } => MsfStatus::Io,
            Error::Json(_) => MsfStatus::InvalidArgument,
            _ => MsfStatus::InvalidData,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(MsfStatus::InvalidArgument, message.into())
}

fn null(name: &str) -> Failure {
    Failure(MsfStatus::NullPointer, format!("`{name}` is null"))
}

/// Run `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MsfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MsfStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {message}"));
            MsfStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn str_in<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not valid UTF-8")))
}

unsafe fn matrix_in<'a>(x: *const f64, n_rows: usize, n_cols: usize) -> Result<ArrayView2<'a, f64>, Failure> {
    let len = n_rows
        .checked_mul(n_cols)
        .ok_or_else(|| invalid("matrix dimensions overflow"))?;
    let data = slice_in(x, len, "x")?;
    ArrayView2::from_shape((n_rows, n_cols), data).map_err(|e| invalid(e.to_string()))
}

unsafe fn names_in(names: *const *const c_char, n_cols: usize) -> Result<Vec<String>, Failure> {
    if names.is_null() {
        return Ok((0..n_cols).map(|j| format!("x{j}")).collect());
    }
    slice::from_raw_parts(names, n_cols)
        .iter()
        .enumerate()
        .map(|(j, &p)| str_in(p, &format!("feature_names[{j}]")).map(str::to_string))
        .collect()
}

unsafe fn model_ref<'a>(model: *const MsfModel) -> Result<&'a TrainedModel, Failure> {
    model.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

fn dense_matrix(names: &[String], x: ArrayView2<'_, f64>, y: Vec<f64>) -> Result<FeatureMatrix, Failure> {
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let aspects = vec![FeatureAspect::Geographical; names.len()];
    Ok(FeatureMatrix::from_dense(&refs, &aspects, x.to_owned(), y)?)
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| invalid("string contains an interior NUL"))
}

/// Message describing the most recent failure on this thread, or null if
/// none. The pointer stays valid until the next failing call on the same
/// thread; do not free it.
#[no_mangle]
pub extern "C" fn msf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn msf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer previously returned by this library and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn msf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// MAE, MAPE (percent) and RMSE of `yhat` against `y`, both of length `n`.
///
/// # Safety
/// `y` and `yhat` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msf_metrics(y: *const f64, yhat: *const f64, n: usize, out: *mut MsfMetrics) -> MsfStatus {
    guard(|| {
        let y = slice_in(y, n, "y")?;
        let yhat = slice_in(yhat, n, "yhat")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = MetricReport::compute(y, yhat)?;
        *out = MsfMetrics {
            mae: r.mae,
            mape: r.mape,
            rmse: r.rmse,
            n: r.n,
        };
        Ok(())
    })
}

/// Solar zenith and azimuth (degrees; azimuth clockwise from north) at a
/// unix time for a site at `latitude`/`longitude` degrees (east positive).
///
/// # Safety
/// `out_zenith` and `out_azimuth` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msf_solar_position(
    latitude: f64,
    longitude: f64,
    unix_seconds: f64,
    out_zenith: *mut f64,
    out_azimuth: *mut f64,
) -> MsfStatus {
    guard(|| {
        let zenith = out_zenith.as_mut().ok_or_else(|| null("out_zenith"))?;
        let azimuth = out_azimuth.as_mut().ok_or_else(|| null("out_azimuth"))?;
        if !unix_seconds.is_finite() {
            return Err(invalid("unix_seconds must be finite"));
        }
        let loc = GeoLocation::new(latitude, longitude, 0.0, 0.0)?;
        let pos = astro::solar_position_unix(&loc, unix_seconds);
        *zenith = pos.zenith;
        *azimuth = pos.azimuth;
        Ok(())
    })
}

/// Clear-sky global horizontal irradiance (W/m²) at a solar zenith angle in
/// degrees; zero when the sun is below the horizon.
#[no_mangle]
pub extern "C" fn msf_clear_sky_ghi(zenith_deg: f64) -> f64 {
    astro::haurwitz_ghi(zenith_deg)
}

/// Variance-gated, F-score-ranked feature selection. Writes the indices of
/// the kept columns, best first, to `out_indices` (capacity `n_cols`) and
/// their number to `out_count`.
///
/// # Safety
/// `x` must hold `n_rows * n_cols` doubles, `y` `n_rows` doubles and
/// `out_indices` room for `n_cols` indices; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msf_select_features(
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    y: *const f64,
    variance_threshold: f64,
    k: usize,
    scaling: MsfScaling,
    out_indices: *mut usize,
    out_count: *mut usize,
) -> MsfStatus {
    guard(|| {
        let x = matrix_in(x, n_rows, n_cols)?;
        let y = slice_in(y, n_rows, "y")?;
        let out_indices = slice_out(out_indices, n_cols, "out_indices")?;
        let out_count = out_count.as_mut().ok_or_else(|| null("out_count"))?;
        let names: Vec<String> = (0..n_cols).map(|j| format!("x{j}")).collect();
        let matrix = dense_matrix(&names, x, y.to_vec())?;
        let config = SelectionConfig {
            variance_threshold,
            k,
            scaling: match scaling {
                MsfScaling::Raw => Scaling::Raw,
                MsfScaling::MinMax => Scaling::MinMax,
            },
        };
        let report = selection::lvkb_report(&matrix, &config)?;
        let kept = report.kept_names();
        for (slot, name) in out_indices.iter_mut().zip(&kept) {
            *slot = matrix.index_of(name).expect("kept names come from the matrix");
        }
        *out_count = kept.len();
        Ok(())
    })
}

/// Train a model. `config_json` selects the kind and hyperparameters, e.g.
/// `{"kind":"gbrt","n_trees":200}`; omitted fields take their defaults.
/// `feature_names` may be null, in which case columns are named `x0`, `x1`, ….
///
/// # Safety
/// `x` must hold `n_rows * n_cols` doubles, `y` `n_rows` doubles,
/// `feature_names` null or `n_cols` NUL-terminated strings; `out_model`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn msf_model_train(
    config_json: *const c_char,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    y: *const f64,
    feature_names: *const *const c_char,
    out_model: *mut *mut MsfModel,
) -> MsfStatus {
    guard(|| {
        let out_model = out_model.as_mut().ok_or_else(|| null("out_model"))?;
        *out_model = ptr::null_mut();
        let config: ModelConfig =
            serde_json::from_str(str_in(config_json, "config_json")?).map_err(|e| invalid(format!("model config: {e}")))?;
        let x = matrix_in(x, n_rows, n_cols)?;
        let y = slice_in(y, n_rows, "y")?;
        let names = names_in(feature_names, n_cols)?;
        let inner = models::train(&config, x, y, &names)?;
        *out_model = Box::into_raw(Box::new(MsfModel { inner }));
        Ok(())
    })
}

/// Predict `n_rows` rows into `out` (length `n_rows`). Columns must be in
/// training order.
///
/// # Safety
/// `model` must be a live handle, `x` must hold `n_rows * n_cols` doubles and
/// `out` room for `n_rows` doubles.
#[no_mangle]
pub unsafe extern "C" fn msf_model_predict(
    model: *const MsfModel,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut f64,
) -> MsfStatus {
    guard(|| {
        let model = model_ref(model)?;
        let x = matrix_in(x, n_rows, n_cols)?;
        let out = slice_out(out, n_rows, "out")?;
        out.copy_from_slice(&model.predict(x)?);
        Ok(())
    })
}

/// Number of input columns the model was trained on (0 for a null handle).
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn msf_model_n_features(model: *const MsfModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.n_features())
}

/// Model kind as a static string (`"svr"`, `"gbrt"`, `"mlp"`), or null for a
/// null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn msf_model_kind(model: *const MsfModel) -> *const c_char {
    match model.as_ref().map(|m| m.inner.kind()) {
        None => ptr::null(),
        Some(models::ModelKind::Svr) => c"svr".as_ptr(),
        Some(models::ModelKind::Gbrt) => c"gbrt".as_ptr(),
        Some(models::ModelKind::Mlp) => c"mlp".as_ptr(),
    }
}

/// Serialize the model to JSON; release the result with [`msf_string_free`].
///
/// # Safety
/// `model` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msf_model_to_json(model: *const MsfModel, out_json: *mut *mut c_char) -> MsfStatus {
    guard(|| {
        let out_json = out_json.as_mut().ok_or_else(|| null("out_json"))?;
        *out_json = ptr::null_mut();
        *out_json = into_c_string(model_ref(model)?.to_json()?)?;
        Ok(())
    })
}

/// Rebuild a model from JSON produced by [`msf_model_to_json`].
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msf_model_from_json(json: *const c_char, out_model: *mut *mut MsfModel) -> MsfStatus {
    guard(|| {
        let out_model = out_model.as_mut().ok_or_else(|| null("out_model"))?;
        *out_model = ptr::null_mut();
        let inner = TrainedModel::from_json(str_in(json, "json")?)?;
        *out_model = Box::into_raw(Box::new(MsfModel { inner }));
        Ok(())
    })
}

/// Write the model to a file.
///
/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated UTF-8 path.
#[no_mangle]
pub unsafe extern "C" fn msf_model_save(model: *const MsfModel, path: *const c_char) -> MsfStatus {
    guard(|| {
        let model = model_ref(model)?;
        model.save(Path::new(str_in(path, "path")?))?;
        Ok(())
    })
}

/// Read a model written by [`msf_model_save`].
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 path; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msf_model_load(path: *const c_char, out_model: *mut *mut MsfModel) -> MsfStatus {
    guard(|| {
        let out_model = out_model.as_mut().ok_or_else(|| null("out_model"))?;
        *out_model = ptr::null_mut();
        let inner = TrainedModel::load(Path::new(str_in(path, "path")?))?;
        *out_model = Box::into_raw(Box::new(MsfModel { inner }));
        Ok(())
    })
}

/// Release a model handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from this library that has not been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn msf_model_free(model: *mut MsfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Partial dependence of the model on column `feature_index` over
/// up to `grid_points` values spanning the column's 1st–99th percentile in
/// `x` (duplicates collapse, so fewer points are possible). Writes the grid
/// to `out_grid`, the mean predictions to `out_response` and the number of
/// points written to `out_count`.
///
/// # Safety
/// `model` must be a live handle, `x` must hold `n_rows * n_cols` doubles,
/// both outputs need room for `grid_points` doubles and `out_count` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn msf_partial_dependence(
    model: *const MsfModel,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    feature_index: usize,
    grid_points: usize,
    out_grid: *mut f64,
    out_response: *mut f64,
    out_count: *mut usize,
) -> MsfStatus {
    guard(|| {
        let model = model_ref(model)?;
        let x = matrix_in(x, n_rows, n_cols)?;
        let out_grid = slice_out(out_grid, grid_points, "out_grid")?;
        let out_response = slice_out(out_response, grid_points, "out_response")?;
        let out_count = out_count.as_mut().ok_or_else(|| null("out_count"))?;
        if n_cols != model.n_features() {
            return Err(Failure(
                MsfStatus::SchemaMismatch,
                format!("model expects {} columns, got {n_cols}", model.n_features()),
            ));
        }
        let feature = model
            .feature_names
            .get(feature_index)
            .ok_or_else(|| invalid(format!("feature_index {feature_index} out of range")))?;
        // Partial dependence never reads the target; any valid load will do.
        let matrix = dense_matrix(&model.feature_names, x, vec![1.0; n_rows])?;
        let grid = GridSpec::Percentile {
            points: grid_points,
            lower: 1.0,
            upper: 99.0,
        };
        let curve = interpret::pdp(model, &matrix, feature, &grid)?;
        let m = curve.grid.len();
        out_grid[..m].copy_from_slice(&curve.grid);
        out_response[..m].copy_from_slice(&curve.response);
        *out_count = m;
        Ok(())
    })
}

/// Pearson correlation between `load[t]` and `feature[t - d]` for each lag
/// d = 0..=max_lag, written to `out_r` (length `max_lag + 1`); the lag with
/// the largest |r| goes to `out_best_lag`.
///
/// # Safety
/// `feature` and `load` must hold `n` doubles, `out_r` room for
/// `max_lag + 1` doubles; `out_best_lag` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msf_lag_scan(
    feature: *const f64,
    load: *const f64,
    n: usize,
    max_lag: usize,
    out_r: *mut f64,
    out_best_lag: *mut usize,
) -> MsfStatus {
    guard(|| {
        let feature = slice_in(feature, n, "feature")?;
        let load = slice_in(load, n, "load")?;
        let len = max_lag.checked_add(1).ok_or_else(|| invalid("max_lag overflows"))?;
        let out_r = slice_out(out_r, len, "out_r")?;
        let best = out_best_lag.as_mut().ok_or_else(|| null("out_best_lag"))?;
        let scan = interpret::lag_correlation_scan(feature, load, max_lag)?;
        for (slot, (_, r)) in out_r.iter_mut().zip(&scan.profile) {
            *slot = *r;
        }
        *best = scan.best_lag;
        Ok(())
    })
}
