//! C ABI for the trof segmentation library.
//!
//! Objects are opaque handles created by `trof_*_new` style functions and
//! released with the matching `trof_*_free`. Every fallible function returns a
//! `TrofStatus`; on failure `trof_last_error` describes the problem. Arrays
//! are copied into caller-provided buffers together with their capacity;
//! pixel arrays hold `width * height` elements, thresholds `K - 1` and means `K`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use trof::init::InitMethod;
use trof::pipeline::{segment_image, InitSource, SegmentConfig, SegmentOutput};
use trof::report::{InputSource, RunReport};
use trof::synth::{Preset, PresetOptions, Synthetic};
use trof::{solve_rof, Error, GrayImage, RofParams, TrofParams, TvVariant};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrofStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    BufferTooSmall = 4,
    Io = 5,
    Format = 6,
    UnknownPreset = 7,
    Panic = 8,
}

/// Total variation discretization.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrofTv {
    Isotropic = 0,
    Anisotropic = 1,
}

/// Source of the initial thresholds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrofInit {
    Fcm = 0,
    Kmeans = 1,
    Explicit = 2,
}

/// Grayscale image with intensities in [0, 1].
pub struct TrofImage(GrayImage);

/// Segmentation settings.
pub struct TrofConfig(SegmentConfig);

/// Output of `trof_segment`.
pub struct TrofResult(SegmentOutput);

/// Synthetic image with ground truth.
pub struct TrofSynthetic {
    preset: Preset,
    inner: Synthetic,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> TrofStatus {
    match e {
        Error::ShapeMismatch { .. } | Error::DataLength { .. } | Error::PhaseCountMismatch(..) => {
            TrofStatus::ShapeMismatch
        }
        Error::Io(_) => TrofStatus::Io,
        Error::Format(_) | Error::Json(_) => TrofStatus::Format,
        Error::UnknownPreset(_) => TrofStatus::UnknownPreset,
        _ => TrofStatus::InvalidArgument,
    }
}

struct Failure(TrofStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TrofStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(TrofStatus::InvalidArgument, msg.into())
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TrofStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => TrofStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".into());
            set_error(format!("panic: {msg}"));
            TrofStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut *mut T, what: &str) -> Result<&'a mut *mut T, Failure> {
    let slot = p.as_mut().ok_or_else(|| null(what))?;
    *slot = ptr::null_mut();
    Ok(slot)
}

unsafe fn input_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn copy_out<T: Copy>(src: &[T], dst: *mut T, cap: usize, what: &str) -> Result<(), Failure> {
    if cap < src.len() {
        return Err(Failure(
            TrofStatus::BufferTooSmall,
            format!("{what} needs {} elements, buffer holds {cap}", src.len()),
        ));
    }
    if src.is_empty() {
        return Ok(());
    }
    if dst.is_null() {
        return Err(null(what));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn trof_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn trof_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn trof_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates an image from `width * height` row-major samples in [0, 1].
///
/// # Safety
/// `data` must point to `width * height` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trof_image_new(
    width: usize,
    height: usize,
    data: *const f64,
    out: *mut *mut TrofImage,
) -> TrofStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let n = width
            .checked_mul(height)
            .ok_or_else(|| invalid("image dimensions overflow"))?;
        let samples = input_slice(data, n, "data")?;
        let img = GrayImage::new(width, height, samples.to_vec())?;
        *slot = boxed(TrofImage(img));
        Ok(())
    })
}

/// Reads an 8/16-bit PGM or PNG grayscale file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trof_image_read(path: *const c_char, out: *mut *mut TrofImage) -> TrofStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let img = trof::io::read_image(c_str(path, "path")?)?;
        *slot = boxed(TrofImage(img));
        Ok(())
    })
}

/// Writes an 8-bit PGM or PNG file, chosen by extension.
///
/// # Safety
/// `image` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn trof_image_write(image: *const TrofImage, path: *const c_char) -> TrofStatus {
    guard(|| {
        let img = borrow(image, "image")?;
        trof::io::write_image(c_str(path, "path")?, img.0.grid())?;
        Ok(())
    })
}

/// Image width, or 0 for NULL.
///
/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn trof_image_width(image: *const TrofImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.width())
}

/// Image height, or 0 for NULL.
///
/// # Safety
/// `image` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn trof_image_height(image: *const TrofImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.height())
}

/// Copies the samples into `buf` (capacity `len`).
///
/// # Safety
/// `image` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn trof_image_data(image: *const TrofImage, buf: *mut f64, len: usize) -> TrofStatus {
    guard(|| copy_out(borrow(image, "image")?.0.data(), buf, len, "image data"))
}

/// # Safety
/// `image` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trof_image_free(image: *mut TrofImage) {
    free(image);
}

/// Solves the ROF problem for `image`; writes the restored image to `out`.
///
/// # Safety
/// `image` must be a live handle; `out` must be writable; `iterations` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn trof_rof(
    image: *const TrofImage,
    mu: f64,
    tv: TrofTv,
    out: *mut *mut TrofImage,
    iterations: *mut usize,
) -> TrofStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let img = borrow(image, "image")?;
        let sol = solve_rof(&img.0, &RofParams::new(mu).with_variant(tv_variant(tv)))?;
        if let Some(it) = iterations.as_mut() {
            *it = sol.iterations;
        }
        *slot = boxed(TrofImage(sol.u));
        Ok(())
    })
}

fn tv_variant(tv: TrofTv) -> TvVariant {
    match tv {
        TrofTv::Isotropic => TvVariant::Isotropic,
        TrofTv::Anisotropic => TvVariant::Anisotropic,
    }
}

/// Default settings for `phases` phases and fidelity weight `mu`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trof_config_new(phases: usize, mu: f64, out: *mut *mut TrofConfig) -> TrofStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let params = TrofParams::new(phases, RofParams::new(mu));
        params.validate()?;
        *slot = boxed(TrofConfig(SegmentConfig::new(params)));
        Ok(())
    })
}

/// Benchmark settings of a synthetic preset (e.g. "example3").
///
/// # Safety
/// `preset` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trof_config_for_preset(preset: *const c_char, out: *mut *mut TrofConfig) -> TrofStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let p: Preset = c_str(preset, "preset")?.parse()?;
        *slot = boxed(TrofConfig(SegmentConfig::for_preset(p)));
        Ok(())
    })
}

/// # Safety
/// `config` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trof_config_free(config: *mut TrofConfig) {
    free(config);
}

/// Sets the ROF and threshold stopping tolerances.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn trof_config_set_tolerances(config: *mut TrofConfig, eps_u: f64, eps_tau: f64) -> TrofStatus {
    guard(|| {
        let c = borrow_mut(config, "config")?;
        let mut next = c.0.trof;
        next.rof.eps_u = eps_u;
        next.eps_tau = eps_tau;
        next.validate()?;
        c.0.trof = next;
        Ok(())
    })
}

/// Sets the ADMM and outer iteration caps.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn trof_config_set_iterations(
    config: *mut TrofConfig,
    max_rof_iter: usize,
    max_outer_iter: usize,
) -> TrofStatus {
    guard(|| {
        let c = borrow_mut(config, "config")?;
        let mut next = c.0.trof;
        next.rof.max_iter = max_rof_iter;
        next.max_outer_iter = max_outer_iter;
        next.validate()?;
        c.0.trof = next;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn trof_config_set_tv(config: *mut TrofConfig, tv: TrofTv) -> TrofStatus {
    guard(|| {
        borrow_mut(config, "config")?.0.trof.rof.variant = tv_variant(tv);
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn trof_config_set_seed(config: *mut TrofConfig, seed: u64) -> TrofStatus {
    guard(|| {
        borrow_mut(config, "config")?.0.seed = seed;
        Ok(())
    })
}

/// Selects clustering initialization; `on_input` clusters the input image
/// instead of the ROF solution.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn trof_config_set_init(config: *mut TrofConfig, init: TrofInit, on_input: bool) -> TrofStatus {
    guard(|| {
        let c = borrow_mut(config, "config")?;
        c.0.init = match init {
            TrofInit::Fcm => InitMethod::Fcm,
            TrofInit::Kmeans => InitMethod::Kmeans,
            TrofInit::Explicit => {
                if c.0.tau.is_none() {
                    return Err(invalid("explicit initialization needs thresholds; use trof_config_set_tau"));
                }
                InitMethod::Explicit
            }
        };
        c.0.init_source = if on_input { InitSource::F } else { InitSource::U };
        Ok(())
    })
}

/// Uses `len` explicit initial thresholds; the phase count becomes `len + 1`.
///
/// # Safety
/// `config` must be a live handle; `tau` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn trof_config_set_tau(config: *mut TrofConfig, tau: *const f64, len: usize) -> TrofStatus {
    guard(|| {
        let c = borrow_mut(config, "config")?;
        let t = input_slice(tau, len, "tau")?.to_vec();
        trof::ThresholdVector::new(t.clone())?;
        c.0.trof.phases = len + 1;
        c.0.init = InitMethod::Explicit;
        c.0.tau = Some(t);
        Ok(())
    })
}

/// Segments `image`.
///
/// # Safety
/// `image` and `config` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trof_segment(
    image: *const TrofImage,
    config: *const TrofConfig,
    out: *mut *mut TrofResult,
) -> TrofStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let img = borrow(image, "image")?;
        let cfg = borrow(config, "config")?;
        *slot = boxed(TrofResult(segment_image(&img.0, &cfg.0)?));
        Ok(())
    })
}

/// # Safety
/// `result` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trof_result_free(result: *mut TrofResult) {
    free(result);
}

/// Final phase count, or 0 for NULL.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn trof_result_phases(result: *const TrofResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.result.partition.phases())
}

/// Number of threshold updates, or 0 for NULL.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn trof_result_outer_iterations(result: *const TrofResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.result.outer_iterations)
}

/// Whether the threshold iteration met its tolerance.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn trof_result_converged(result: *const TrofResult) -> bool {
    result.as_ref().is_some_and(|r| r.0.result.converged)
}

/// Copies the per-pixel phase labels (width * height, row-major).
///
/// # Safety
/// `result` must be a live handle; `buf` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn trof_result_labels(result: *const TrofResult, buf: *mut u32, len: usize) -> TrofStatus {
    guard(|| {
        let r = borrow(result, "result")?;
        let labels: Vec<u32> = r.0.result.partition.labels().iter().map(|&l| l as u32).collect();
        copy_out(&labels, buf, len, "labels")
    })
}

/// Copies the K - 1 final thresholds.
///
/// # Safety
/// `result` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn trof_result_thresholds(result: *const TrofResult, buf: *mut f64, len: usize) -> TrofStatus {
    guard(|| copy_out(borrow(result, "result")?.0.result.final_taus.as_slice(), buf, len, "thresholds"))
}

/// Copies the K final phase means.
///
/// # Safety
/// `result` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn trof_result_means(result: *const TrofResult, buf: *mut f64, len: usize) -> TrofStatus {
    guard(|| copy_out(&borrow(result, "result")?.0.result.final_means, buf, len, "means"))
}

/// JSON report of the run; release with `trof_string_free`.
///
/// # Safety
/// `result` and `config` must be the live handles passed to `trof_segment`;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trof_result_report_json(
    result: *const TrofResult,
    config: *const TrofConfig,
    out: *mut *mut c_char,
) -> TrofStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let r = borrow(result, "result")?;
        let cfg = borrow(config, "config")?;
        let (width, height) = r.0.result.partition.shape();
        let input = InputSource { path: None, preset: None, width, height };
        let json = RunReport::new(input, &cfg.0, &r.0, None).to_json()?;
        *slot = CString::new(json)
            .map_err(|_| invalid("report contains NUL"))?
            .into_raw();
        Ok(())
    })
}

/// Generates a synthetic preset. `size == 0` keeps the preset's default size.
///
/// # Safety
/// `preset` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trof_synth(
    preset: *const c_char,
    size: usize,
    seed: u64,
    out: *mut *mut TrofSynthetic,
) -> TrofStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let p: Preset = c_str(preset, "preset")?.parse()?;
        let opts = PresetOptions {
            size: (size > 0).then_some(size),
            seed,
            ..PresetOptions::default()
        };
        *slot = boxed(TrofSynthetic { preset: p, inner: p.generate(&opts)? });
        Ok(())
    })
}

/// # Safety
/// `synthetic` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trof_synthetic_free(synthetic: *mut TrofSynthetic) {
    free(synthetic);
}

/// Copy of the degraded image as a new handle.
///
/// # Safety
/// `synthetic` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn trof_synthetic_image(synthetic: *const TrofSynthetic, out: *mut *mut TrofImage) -> TrofStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        *slot = boxed(TrofImage(borrow(synthetic, "synthetic")?.inner.image.clone()));
        Ok(())
    })
}

/// Phase count of the preset's benchmark segmentation.
///
/// # Safety
/// `synthetic` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn trof_synthetic_phases(synthetic: *const TrofSynthetic) -> usize {
    synthetic.as_ref().map_or(0, |s| s.preset.phases())
}

/// Copies ground-truth labels with `phases` phases (0 = the preset's count).
///
/// # Safety
/// `synthetic` must be a live handle; `buf` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn trof_synthetic_truth(
    synthetic: *const TrofSynthetic,
    phases: usize,
    buf: *mut u32,
    len: usize,
) -> TrofStatus {
    guard(|| {
        let s = borrow(synthetic, "synthetic")?;
        let k = if phases == 0 { s.preset.phases() } else { phases };
        let truth = s.inner.truth_for(k)?;
        let labels: Vec<u32> = truth.partition.labels().iter().map(|&l| l as u32).collect();
        copy_out(&labels, buf, len, "truth labels")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_codes() {
        assert_eq!(status_of(&Error::UnknownPreset("x".into())), TrofStatus::UnknownPreset);
        assert_eq!(status_of(&Error::PhaseCountMismatch(1, 2)), TrofStatus::ShapeMismatch);
        assert_eq!(status_of(&Error::InvalidParameter("p".into())), TrofStatus::InvalidArgument);
    }

    #[test]
    fn panics_become_status() {
        assert_eq!(guard(|| panic!("boom")), TrofStatus::Panic);
        let msg = unsafe { CStr::from_ptr(trof_last_error()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
    }
}
