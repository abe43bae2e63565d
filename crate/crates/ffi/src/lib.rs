//! C interface to the `steklov` crate.
//!
//! Fields cross the boundary as opaque `StkField` handles owned by the
//! caller and released with `stk_field_free`. Every fallible call returns
//! an `StkStatus`; on failure the message is kept per thread and can be
//! fetched with `stk_last_error_message`. Exponents are passed as doubles,
//! with `INFINITY` standing for the supremum norm.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use steklov::io::{read_named_field, write_named_field};
use steklov::steklov::steklov_time_derivative;
use steklov::{
    bochner_norm, steklov_average, steklov_average_extended, BochnerSpec, Error, Exponent,
    Field, SpaceGrid, SteklovParams, TimeGrid,
};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The operation has no domain, e.g. a window at least as long as `I`.
    Domain = 3,
    Io = 4,
    /// A field file could not be parsed.
    Format = 5,
    BufferTooSmall = 6,
    /// A bug inside the library; the handle arguments are left untouched.
    Panic = 7,
}

/// A sampled space-time field with its grids.
pub struct StkField {
    name: String,
    field: Field,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> StkStatus {
    match err {
        Error::Io { .. } => StkStatus::Io,
        Error::Manifest { .. } => StkStatus::Format,
        Error::EmptyDomain { .. } | Error::TooFewPoints { .. } => StkStatus::Domain,
        _ => StkStatus::InvalidArgument,
    }
}

fn fail(status: StkStatus, msg: impl Into<String>) -> StkStatus {
    set_error(msg);
    status
}

/// Runs `body`, turning errors and panics into status codes.
fn guard<F>(body: F) -> StkStatus
where
    F: FnOnce() -> Result<(), StkStatus>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => StkStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(StkStatus::Panic, "internal panic"),
    }
}

fn check<T>(r: steklov::Result<T>) -> Result<T, StkStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), StkStatus> {
    if p.is_null() {
        Err(fail(StkStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, StkStatus> {
    non_null(p, what)?;
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(StkStatus::InvalidArgument, format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

fn exponent(p: f64, what: &str) -> Result<Exponent, StkStatus> {
    if p == f64::INFINITY {
        return Ok(Exponent::Infinity);
    }
    Exponent::new(p).map_err(|e| fail(StkStatus::InvalidArgument, format!("{what}: {e}")))
}

fn hand_out(out: *mut *mut StkField, name: String, field: Field) {
    // SAFETY: callers check `out` for null before computing the field.
    unsafe { *out = Box::into_raw(Box::new(StkField { name, field })) };
}

/// Builds a field from raw grids and values.
///
/// `shape`, `spacing` and `origin` hold `ndim` entries (`ndim` may be 0 for
/// a single spatial point of unit measure). `values` holds `values_len` samples in
/// space-major order: the time series of each spatial point is contiguous,
/// spatial points in row-major order.
///
/// # Safety
/// Array pointers must be valid for the stated lengths; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn stk_field_new(
    ndim: usize,
    shape: *const usize,
    spacing: *const f64,
    origin: *const f64,
    t0: f64,
    dt: f64,
    n_time: usize,
    values: *const f64,
    values_len: usize,
    out: *mut *mut StkField,
) -> StkStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(values, "values")?;
        if ndim > 0 {
            non_null(shape, "shape")?;
            non_null(spacing, "spacing")?;
            non_null(origin, "origin")?;
        }
        let space = if ndim == 0 {
            SpaceGrid::point()
        } else {
            let shape = std::slice::from_raw_parts(shape, ndim).to_vec();
            let spacing = std::slice::from_raw_parts(spacing, ndim).to_vec();
            let origin = std::slice::from_raw_parts(origin, ndim).to_vec();
            check(SpaceGrid::new(shape, spacing, origin))?
        };
        let time = check(TimeGrid::new(t0, dt, n_time))?;
        let values = std::slice::from_raw_parts(values, values_len).to_vec();
        let field = check(Field::new(space, time, values))?;
        hand_out(out, String::from("field"), field);
        Ok(())
    })
}

/// Reads a field file (JSON manifest plus binary payload).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stk_field_read(path: *const c_char, out: *mut *mut StkField) -> StkStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = path_arg(path, "path")?;
        let (name, field) = check(read_named_field(&path))?;
        hand_out(out, name, field);
        Ok(())
    })
}

/// Writes a field file; the payload lands next to the manifest.
///
/// # Safety
/// `field` must come from this library; `path` must be a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn stk_field_write(field: *const StkField, path: *const c_char) -> StkStatus {
    guard(|| {
        non_null(field, "field")?;
        let path = path_arg(path, "path")?;
        let f = &*field;
        check(write_named_field(&f.field, &f.name, &path))
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `field` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stk_field_free(field: *mut StkField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of stored samples, or 0 for null.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stk_field_len(field: *const StkField) -> usize {
    field.as_ref().map_or(0, |f| f.field.values().len())
}

/// Number of spatial points, or 0 for null.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stk_field_n_space(field: *const StkField) -> usize {
    field.as_ref().map_or(0, |f| f.field.n_space())
}

/// Number of time points, or 0 for null.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stk_field_n_time(field: *const StkField) -> usize {
    field.as_ref().map_or(0, |f| f.field.n_time())
}

/// Start and step of the field's time grid.
///
/// # Safety
/// `field` must be a live handle; `t0` and `dt` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stk_field_time_grid(
    field: *const StkField,
    t0: *mut f64,
    dt: *mut f64,
) -> StkStatus {
    guard(|| {
        non_null(field, "field")?;
        non_null(t0, "t0")?;
        non_null(dt, "dt")?;
        let time = (*field).field.time();
        *t0 = time.t0;
        *dt = time.dt;
        Ok(())
    })
}

/// Copies all samples into `buf`, which must hold `stk_field_len` values.
///
/// # Safety
/// `field` must be a live handle; `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn stk_field_copy_values(
    field: *const StkField,
    buf: *mut f64,
    len: usize,
) -> StkStatus {
    guard(|| {
        non_null(field, "field")?;
        non_null(buf, "buf")?;
        let values = (*field).field.values();
        if len < values.len() {
            return Err(fail(
                StkStatus::BufferTooSmall,
                format!("buffer holds {len} values, field has {}", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// Steklov average with window `h`, a positive multiple of the time step.
/// With `extended` the result covers the whole time grid (zero extension
/// past the end); otherwise only the times `t` with `t + h` in the grid.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stk_steklov_average(
    field: *const StkField,
    h: f64,
    extended: bool,
    out: *mut *mut StkField,
) -> StkStatus {
    guard(|| {
        non_null(field, "field")?;
        non_null(out, "out")?;
        let f = &*field;
        let params = check(SteklovParams::from_window(h, f.field.time()))?;
        let avg = if extended {
            check(steklov_average_extended(&f.field, &params))?
        } else {
            check(steklov_average(&f.field, &params))?
        };
        hand_out(out, format!("{}_h{}", f.name, params.steps()), avg);
        Ok(())
    })
}

/// `(v(t + h) - v(t)) / h` on the times where it is defined.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stk_time_derivative(
    field: *const StkField,
    h: f64,
    out: *mut *mut StkField,
) -> StkStatus {
    guard(|| {
        non_null(field, "field")?;
        non_null(out, "out")?;
        let f = &*field;
        let params = check(SteklovParams::from_window(h, f.field.time()))?;
        let d = check(steklov_time_derivative(&f.field, &params))?;
        hand_out(out, format!("{}_dt_h{}", f.name, params.steps()), d);
        Ok(())
    })
}

/// Norm of the field in `L^r(I, L^q(E))`; pass `INFINITY` for a supremum.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stk_bochner_norm(
    field: *const StkField,
    q: f64,
    r: f64,
    out: *mut f64,
) -> StkStatus {
    guard(|| {
        non_null(field, "field")?;
        non_null(out, "out")?;
        let spec = check(BochnerSpec::new(exponent(q, "q")?, exponent(r, "r")?))?;
        *out = check(bochner_norm(&(*field).field, spec))?;
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`) and returns the length the full message
/// needs, terminator included.
///
/// # Safety
/// `buf` must be null or writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn stk_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn stk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
