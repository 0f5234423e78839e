//! C ABI over `flagcs`.
//!
//! Every fallible function returns a [`FlagcsStatus`]; on failure the
//! message is available from [`flagcs_last_error`] on the same thread.
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Strings returned through `char **` are freed
//! with [`flagcs_string_free`]. Matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use flagcs::dynamics::{self, BilinearSystem, ControlWord, SystemSpec};
use flagcs::flag::{FlagPoint, FlagSignature};
use flagcs::harness::{self, RunConfig, VerificationReport};
use flagcs::weyl::{self, ThetaSet, WeylElement};
use flagcs::Error;
use nalgebra::DMatrix;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlagcsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Dimension = 4,
    InvalidArgument = 5,
    Numerical = 6,
    Label = 7,
    Structure = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// A validated bilinear system.
pub struct FlagcsSystem {
    inner: BilinearSystem,
}

/// The result of a full analysis run.
pub struct FlagcsReport {
    inner: VerificationReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> FlagcsStatus {
    match err {
        Error::Stage { source, .. } => status_of(source),
        Error::Config(_) | Error::Json(_) | Error::Range(_) | Error::Resolution(_) => FlagcsStatus::Config,
        Error::Dimension(_) | Error::InvalidDimension(_) => FlagcsStatus::Dimension,
        Error::InvalidTheta(_) | Error::InvalidPermutation(_) | Error::Projection(_) | Error::Chamber(_) => {
            FlagcsStatus::InvalidArgument
        }
        Error::NotSplit(_) | Error::Singular(_) => FlagcsStatus::Numerical,
        Error::Label(_) => FlagcsStatus::Label,
        Error::Structure(_) => FlagcsStatus::Structure,
        Error::Io(_) => FlagcsStatus::Io,
    }
}

struct Failure(FlagcsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FlagcsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FlagcsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FlagcsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FlagcsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(FlagcsStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn read_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn flagcs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn flagcs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a system from JSON `{"n", "A", "B", "range": {"lo", "hi"}}`.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flagcs_system_from_json(json: *const c_char, out: *mut *mut FlagcsSystem) -> FlagcsStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let spec: SystemSpec = serde_json::from_str(text).map_err(|e| Failure(FlagcsStatus::Config, e.to_string()))?;
        let inner = BilinearSystem::from_spec(&spec)?;
        write_out(out, Box::into_raw(Box::new(FlagcsSystem { inner })), "out")
    })
}

/// # Safety
/// `sys` must be null or a handle from [`flagcs_system_from_json`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn flagcs_system_free(sys: *mut FlagcsSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `sys` must be a live handle; `n` and `m` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn flagcs_system_shape(sys: *const FlagcsSystem, n: *mut usize, m: *mut usize) -> FlagcsStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null("sys"))?;
        write_out(n, sys.inner.n(), "n")?;
        write_out(m, sys.inner.m(), "m")
    })
}

/// Flows the flag spanned by the leading columns of `frame_in` (`n × n`,
/// row-major) with subspace dimensions `dims` along a piecewise-constant
/// control: piece `k` uses `controls[k*m .. (k+1)*m]` for `durations[k]`.
/// Writes the resulting orthonormal frame to `frame_out` (`n × n`).
///
/// # Safety
/// All pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn flagcs_flow(
    sys: *const FlagcsSystem,
    frame_in: *const f64,
    dims: *const usize,
    dims_len: usize,
    controls: *const f64,
    durations: *const f64,
    pieces: usize,
    frame_out: *mut f64,
) -> FlagcsStatus {
    guard(|| {
        let sys = &sys.as_ref().ok_or_else(|| null("sys"))?.inner;
        let (n, m) = (sys.n(), sys.m());
        let frame = read_slice(frame_in, n * n, "frame_in")?;
        let dims = read_slice(dims, dims_len, "dims")?;
        let controls = read_slice(controls, pieces * m, "controls")?;
        let durations = read_slice(durations, pieces, "durations")?;
        if frame_out.is_null() {
            return Err(null("frame_out"));
        }
        let signature = FlagSignature::new(n, dims.to_vec())?;
        let x = FlagPoint::from_basis(&DMatrix::from_row_slice(n, n, frame), signature)?;
        let word =
            ControlWord::new((0..pieces).map(|k| (controls[k * m..(k + 1) * m].to_vec(), durations[k])).collect())?;
        let y = dynamics::flow_point(sys, &x, &word)?;
        std::slice::from_raw_parts_mut(frame_out, n * n).copy_from_slice(&y.to_row_major());
        Ok(())
    })
}

/// Runs the full pipeline on a JSON run configuration. A report whose
/// checks failed is still returned with [`FlagcsStatus::Ok`]; query
/// [`flagcs_report_passed`].
///
/// # Safety
/// `config_json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flagcs_analyze_json(config_json: *const c_char, out: *mut *mut FlagcsReport) -> FlagcsStatus {
    guard(|| {
        let config = RunConfig::from_json(read_str(config_json, "config_json")?)?;
        let inner = harness::run(&config)?;
        write_out(out, Box::into_raw(Box::new(FlagcsReport { inner })), "out")
    })
}

/// # Safety
/// `report` must be null or a handle from [`flagcs_analyze_json`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn flagcs_report_free(report: *mut FlagcsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// The report as JSON; free with [`flagcs_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flagcs_report_json(report: *const FlagcsReport, out: *mut *mut c_char) -> FlagcsStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        let json = CString::new(report.inner.to_json()).expect("JSON has no nul bytes");
        write_out(out, json.into_raw(), "out")
    })
}

/// Numbers of labeled control sets and chain control sets.
///
/// # Safety
/// `report` must be a live handle; the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn flagcs_report_counts(
    report: *const FlagcsReport,
    control_sets: *mut usize,
    chain_sets: *mut usize,
) -> FlagcsStatus {
    guard(|| {
        let report = &report.as_ref().ok_or_else(|| null("report"))?.inner;
        write_out(control_sets, report.control_sets.len(), "control_sets")?;
        write_out(chain_sets, report.chain_sets.len(), "chain_sets")
    })
}

/// Writes 1 if no check failed, 0 otherwise.
///
/// # Safety
/// `report` must be a live handle and `passed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flagcs_report_passed(report: *const FlagcsReport, passed: *mut i32) -> FlagcsStatus {
    guard(|| {
        let report = &report.as_ref().ok_or_else(|| null("report"))?.inner;
        write_out(passed, i32::from(report.passed), "passed")
    })
}

/// `|W_L \ W / W_R|` for `W = S_n`; `left` and `right` list simple-root
/// indices in `1..n-1`.
///
/// # Safety
/// `left` and `right` must be valid for their lengths; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn flagcs_double_coset_count(
    n: usize,
    left: *const usize,
    left_len: usize,
    right: *const usize,
    right_len: usize,
    out: *mut usize,
) -> FlagcsStatus {
    guard(|| {
        let l = ThetaSet::new(n, read_slice(left, left_len, "left")?.iter().copied())?;
        let r = ThetaSet::new(n, read_slice(right, right_len, "right")?.iter().copied())?;
        write_out(out, weyl::double_cosets(n, &l, &r)?.len(), "out")
    })
}

/// Reduced word of the permutation `perm` (one-line, 1-based). Writes up to
/// `capacity` letters to `word` and the full length to `len`; fails with
/// [`FlagcsStatus::BufferTooSmall`] if the word does not fit.
///
/// # Safety
/// `perm` must be valid for `n` entries, `word` for `capacity`, `len` valid.
#[no_mangle]
pub unsafe extern "C" fn flagcs_reduced_word(
    perm: *const usize,
    n: usize,
    word: *mut usize,
    capacity: usize,
    len: *mut usize,
) -> FlagcsStatus {
    guard(|| {
        let w = WeylElement::new(read_slice(perm, n, "perm")?.to_vec())?;
        let letters = weyl::reduced_word(&w);
        write_out(len, letters.len(), "len")?;
        if letters.len() > capacity {
            return Err(Failure(
                FlagcsStatus::BufferTooSmall,
                format!("reduced word has {} letters, buffer holds {capacity}", letters.len()),
            ));
        }
        if !letters.is_empty() {
            if word.is_null() {
                return Err(null("word"));
            }
            ptr::copy_nonoverlapping(letters.as_ptr(), word, letters.len());
        }
        Ok(())
    })
}
