//! C ABI over the os2e core.
//!
//! Every function returns an [`Os2eStatus`]. On failure the message is kept
//! per thread and can be read with [`os2e_error_message`] until the next
//! failing call on that thread. Models are opaque handles owned by the
//! caller and released with [`os2e_model_free`]. Matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use ndarray::{Array2, ArrayView2};
use os2e::nn::{predict, EVENT_HEAD};
use os2e::pipeline::{infer_image, CropConfig, ImageBuffer, NetworkScorer, PipelineConfig, RatioMode};
use os2e::select::{greedy_select, SelectionProblem};
use os2e::stats::{bayes_posterior, check_simplex, conditional_entropy, ConditionalTable, INGEST_SIMPLEX_TOL};
use os2e::train::evaluate;
use os2e::Error;

/// Largest number of scale factors an [`Os2eCropConfig`] can carry.
pub const OS2E_MAX_SCALES: usize = 8;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Os2eStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Unnormalized = 4,
    ImageTooSmall = 5,
    InsufficientClasses = 6,
    Io = 7,
    Parse = 8,
    Divergence = 9,
    /// A panic was caught at the boundary.
    Internal = 10,
}

/// Crop grid settings. Only the first `n_scale_factors` entries of
/// `scale_factors` are read.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct Os2eCropConfig {
    pub base_side: usize,
    pub crop_side: usize,
    pub grid: usize,
    pub n_scale_factors: usize,
    pub scale_factors: [f64; OS2E_MAX_SCALES],
    pub aspect_preserving: bool,
    pub square: bool,
}

/// Opaque trained network.
pub struct Os2eModel {
    scorer: NetworkScorer,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> Os2eStatus {
    match e {
        Error::DimensionMismatch { .. } => Os2eStatus::DimensionMismatch,
        Error::Unnormalized { .. } => Os2eStatus::Unnormalized,
        Error::ImageTooSmall { .. } => Os2eStatus::ImageTooSmall,
        Error::InsufficientClasses { .. } => Os2eStatus::InsufficientClasses,
        Error::Io { .. } => Os2eStatus::Io,
        Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => Os2eStatus::Parse,
        Error::Divergence { .. } => Os2eStatus::Divergence,
        _ => Os2eStatus::InvalidArgument,
    }
}

struct Fail(Os2eStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> Os2eStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Os2eStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal error".into());
            Os2eStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(Os2eStatus::NullPointer, format!("null pointer: {what}"))
}

fn invalid(message: impl Into<String>) -> Fail {
    Fail(Os2eStatus::InvalidArgument, message.into())
}

/// # Safety
/// `p` must be null or valid for `len` reads.
unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or valid for `len` writes.
unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

/// # Safety
/// `p` must be null or valid for one write.
unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

fn product(a: usize, b: usize) -> Result<usize, Fail> {
    a.checked_mul(b).ok_or_else(|| invalid("matrix size overflows"))
}

fn crop_from_c(c: &Os2eCropConfig) -> Result<CropConfig, Fail> {
    if c.n_scale_factors > OS2E_MAX_SCALES {
        return Err(invalid(format!(
            "n_scale_factors {} exceeds {OS2E_MAX_SCALES}",
            c.n_scale_factors
        )));
    }
    let mut ratio_modes = Vec::new();
    if c.aspect_preserving {
        ratio_modes.push(RatioMode::AspectPreserving);
    }
    if c.square {
        ratio_modes.push(RatioMode::Square);
    }
    let config = CropConfig {
        base_side: c.base_side,
        crop_side: c.crop_side,
        scale_factors: c.scale_factors[..c.n_scale_factors].to_vec(),
        ratio_modes,
        grid: c.grid,
    };
    config.validate()?;
    Ok(config)
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn os2e_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Entropy in bits of one posterior row `p(e|c)` of length `n_events`.
/// The row must sum to 1 within 1e-6.
///
/// # Safety
/// `posterior` must hold `n_events` values and `out_bits` be writable.
#[no_mangle]
pub unsafe extern "C" fn os2e_conditional_entropy(
    posterior: *const f64,
    n_events: usize,
    out_bits: *mut f64,
) -> Os2eStatus {
    guard(|| {
        let row = input(posterior, n_events, "posterior")?;
        check_simplex(row, INGEST_SIMPLEX_TOL)?;
        let h = conditional_entropy(row)?;
        write_out(out_bits, h, "out_bits")
    })
}

/// Greedy class selection from a `n_classes x n_events` conditional table
/// `p(c|e)` and per-event sample counts. Writes `k` class indices in pick
/// order and the energy of the subset.
///
/// # Safety
/// `cond` must hold `n_classes * n_events` values, `counts` `n_events`
/// values and `out_selected` room for `k` entries.
#[no_mangle]
pub unsafe extern "C" fn os2e_select_classes(
    cond: *const f64,
    n_classes: usize,
    n_events: usize,
    counts: *const usize,
    lambda: f64,
    k: usize,
    out_selected: *mut usize,
    out_energy: *mut f64,
) -> Os2eStatus {
    guard(|| {
        let values = input(cond, product(n_classes, n_events)?, "cond")?;
        let counts = input(counts, n_events, "counts")?;
        let out = output(out_selected, k, "out_selected")?;
        let cond = Array2::from_shape_vec((n_classes, n_events), values.to_vec())
            .map_err(|e| invalid(e.to_string()))?;
        let table = ConditionalTable::from_parts(cond, counts.to_vec())?;
        let problem = SelectionProblem::new(bayes_posterior(&table), lambda, k)?;
        let result = greedy_select(&problem)?;
        out.copy_from_slice(&result.selected);
        write_out(out_energy, result.energy, "out_energy")
    })
}

/// Loads a checkpoint JSON file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out_model` writable. On
/// success `*out_model` must later be passed to [`os2e_model_free`].
#[no_mangle]
pub unsafe extern "C" fn os2e_model_load(path: *const c_char, out_model: *mut *mut Os2eModel) -> Os2eStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out_model.is_null() {
            return Err(null("out_model"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not UTF-8"))?;
        let ckpt = os2e::io::read_checkpoint(Path::new(path))?;
        let model = Box::new(Os2eModel {
            scorer: NetworkScorer::new(ckpt)?,
        });
        out_model.write(Box::into_raw(model));
        Ok(())
    })
}

/// Input width and event count of a model.
///
/// # Safety
/// `model` must come from [`os2e_model_load`]; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn os2e_model_dims(
    model: *const Os2eModel,
    out_inputs: *mut usize,
    out_events: *mut usize,
) -> Os2eStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let config = &m.scorer.checkpoint().config;
        write_out(out_inputs, config.input_dim, "out_inputs")?;
        write_out(out_events, config.heads[EVENT_HEAD], "out_events")
    })
}

/// Event probabilities for `n_rows` inputs of width `n_cols`.
///
/// # Safety
/// `inputs` must hold `n_rows * n_cols` values and `out_probs` room for
/// `n_rows * n_events`.
#[no_mangle]
pub unsafe extern "C" fn os2e_model_predict(
    model: *const Os2eModel,
    inputs: *const f64,
    n_rows: usize,
    n_cols: usize,
    out_probs: *mut f64,
) -> Os2eStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let ckpt = m.scorer.checkpoint();
        let x = input(inputs, product(n_rows, n_cols)?, "inputs")?;
        let x = ArrayView2::from_shape((n_rows, n_cols), x).map_err(|e| invalid(e.to_string()))?;
        let probs = predict(&ckpt.config, &ckpt.params, x, EVENT_HEAD)?;
        let out = output(out_probs, probs.len(), "out_probs")?;
        out.iter_mut().zip(probs.iter()).for_each(|(o, &p)| *o = p);
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or come from [`os2e_model_load`] and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn os2e_model_free(model: *mut Os2eModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// The default crop grid: base 256, crop 224, scales 1, 1.5 and 2, both
/// ratio modes, 3x3 cells.
///
/// # Safety
/// `out_config` must be writable.
#[no_mangle]
pub unsafe extern "C" fn os2e_crop_config_default(out_config: *mut Os2eCropConfig) -> Os2eStatus {
    guard(|| {
        let d = CropConfig::default();
        let mut scale_factors = [0.0; OS2E_MAX_SCALES];
        scale_factors[..d.scale_factors.len()].copy_from_slice(&d.scale_factors);
        let c = Os2eCropConfig {
            base_side: d.base_side,
            crop_side: d.crop_side,
            grid: d.grid,
            n_scale_factors: d.scale_factors.len(),
            scale_factors,
            aspect_preserving: d.ratio_modes.contains(&RatioMode::AspectPreserving),
            square: d.ratio_modes.contains(&RatioMode::Square),
        };
        write_out(out_config, c, "out_config")
    })
}

/// Number of regions scored per image.
///
/// # Safety
/// `config` must point to a valid config and `out_count` be writable.
#[no_mangle]
pub unsafe extern "C" fn os2e_region_count(config: *const Os2eCropConfig, out_count: *mut usize) -> Os2eStatus {
    guard(|| {
        let c = crop_from_c(config.as_ref().ok_or_else(|| null("config"))?)?;
        write_out(out_count, c.region_count(), "out_count")
    })
}

/// Multi-region event scores of one interleaved `height x width x channels`
/// image. Both models must read flattened crops and share the event count.
///
/// # Safety
/// `pixels` must hold `height * width * channels` values and `out_scores`
/// room for the event count.
#[no_mangle]
pub unsafe extern "C" fn os2e_infer_image(
    object_model: *const Os2eModel,
    scene_model: *const Os2eModel,
    pixels: *const f64,
    height: usize,
    width: usize,
    channels: usize,
    config: *const Os2eCropConfig,
    mean_pixel: f64,
    alpha_o: f64,
    alpha_s: f64,
    out_scores: *mut f64,
) -> Os2eStatus {
    guard(|| {
        let o = object_model.as_ref().ok_or_else(|| null("object_model"))?;
        let s = scene_model.as_ref().ok_or_else(|| null("scene_model"))?;
        let crop = crop_from_c(config.as_ref().ok_or_else(|| null("config"))?)?;
        let n = product(product(height, width)?, channels)?;
        let data = input(pixels, n, "pixels")?.to_vec();
        let image = ImageBuffer::new(height, width, channels, data)?;
        let pipeline = PipelineConfig {
            crop,
            mean_pixel: vec![mean_pixel],
            alpha_o,
            alpha_s,
        };
        let scores = infer_image(&image, &pipeline, &o.scorer, &s.scorer)?;
        output(out_scores, scores.len(), "out_scores")?.copy_from_slice(&scores);
        Ok(())
    })
}

/// Top-1 accuracy and mean average precision of an `n_samples x n_events`
/// score matrix.
///
/// # Safety
/// `scores` must hold `n_samples * n_events` values and `labels`
/// `n_samples` values.
#[no_mangle]
pub unsafe extern "C" fn os2e_evaluate(
    scores: *const f64,
    n_samples: usize,
    n_events: usize,
    labels: *const usize,
    out_accuracy: *mut f64,
    out_map: *mut f64,
) -> Os2eStatus {
    guard(|| {
        let values = input(scores, product(n_samples, n_events)?, "scores")?;
        let labels = input(labels, n_samples, "labels")?;
        let view = ArrayView2::from_shape((n_samples, n_events), values).map_err(|e| invalid(e.to_string()))?;
        let eval = evaluate(view, labels)?;
        write_out(out_accuracy, eval.accuracy, "out_accuracy")?;
        write_out(out_map, eval.map, "out_map")
    })
}
