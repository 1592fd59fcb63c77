//! C ABI over the `wellposed` toolkit.
//!
//! Conventions:
//! * every fallible function returns a [`WpStatus`]; on failure a message is
//!   available from [`wp_last_error`] on the same thread;
//! * matrices are dense, row-major `double` arrays;
//! * objects are opaque handles released with their `*_free` function;
//!   strings returned through `char **` are released with [`wp_string_free`];
//! * panics never cross the boundary; they surface as `WP_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use wellposed::beam::{beam_transfer_h, beam_transfer_h1};
use wellposed::experiment::{self, ExperimentConfig};
use wellposed::feedback::{self, closed_loop, FeedbackGain, K0Inputs, Theta0Inputs};
use wellposed::gramian;
use wellposed::system::{self, io};
use wellposed::{Error, Realization, TimeGrid};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Singular = 4,
    NotAdmissible = 5,
    NotExact = 6,
    NonConvergent = 7,
    Parse = 8,
    Io = 9,
    Panic = 10,
}

/// Opaque realization `(A, B, C, D)` with real entries.
pub struct WpRealization {
    inner: Realization,
}

/// Norms entering the controllability radius (see [`wp_k0_bound`]).
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct WpK0Inputs {
    pub t0: f64,
    pub d: f64,
    pub f: f64,
    pub phi: f64,
    pub f_pert: f64,
    pub s0: f64,
}

/// Norms entering the observability radius (see [`wp_theta0_bound`]).
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct WpTheta0Inputs {
    pub t0: f64,
    pub d: f64,
    pub f: f64,
    pub f_pert: f64,
    pub psi: f64,
    pub k_obs: f64,
    pub alpha0: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> WpStatus {
    match e {
        Error::Dimension { .. } => WpStatus::Dimension,
        Error::Singular { .. } | Error::FeedthroughLoop | Error::RankDeficient { .. } => WpStatus::Singular,
        Error::NotAdmissible { .. } => WpStatus::NotAdmissible,
        Error::NotControllable { .. } | Error::NotObservable { .. } => WpStatus::NotExact,
        Error::NonConvergent { .. } => WpStatus::NonConvergent,
        Error::Json(_) | Error::Csv(_) | Error::Usage(_) => WpStatus::Parse,
        Error::Io(_) => WpStatus::Io,
        _ => WpStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into a status and the last-error slot.
fn guard(f: impl FnOnce() -> Result<(), (WpStatus, String)>) -> WpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            WpStatus::Panic
        }
    }
}

fn lib<T>(r: wellposed::Result<T>) -> Result<T, (WpStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (WpStatus, String) {
    (WpStatus::NullPointer, format!("{what} is NULL"))
}

fn invalid(msg: impl Into<String>) -> (WpStatus, String) {
    (WpStatus::InvalidArgument, msg.into())
}

/// Reads a `rows x cols` row-major matrix; `NULL` is accepted for empty shapes.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles when the shape is nonempty.
unsafe fn read_matrix(data: *const f64, rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>, (WpStatus, String)> {
    let len = rows.checked_mul(cols).ok_or_else(|| invalid(format!("{what}: size overflow")))?;
    if len == 0 {
        return Ok(DMatrix::zeros(rows, cols));
    }
    if data.is_null() {
        return Err(null(what));
    }
    let slice = std::slice::from_raw_parts(data, len);
    Ok(DMatrix::from_row_slice(rows, cols, slice))
}

/// # Safety
/// `out` must be writable for `m.len()` doubles.
unsafe fn write_matrix(m: &DMatrix<f64>, out: *mut f64) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            *out.add(i * m.ncols() + j) = m[(i, j)];
        }
    }
}

fn realization_ref<'a>(r: *const WpRealization) -> Result<&'a Realization, (WpStatus, String)> {
    // SAFETY: non-null handles come from `Box::into_raw` in this crate.
    unsafe { r.as_ref() }.map(|h| &h.inner).ok_or_else(|| null("realization"))
}

fn emit_realization(r: Realization, out: *mut *mut WpRealization) -> Result<(), (WpStatus, String)> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    // SAFETY: checked non-null; the caller owns the written handle.
    unsafe { *out = Box::into_raw(Box::new(WpRealization { inner: r })) };
    Ok(())
}

fn emit_string(s: String, out: *mut *mut c_char) -> Result<(), (WpStatus, String)> {
    if out.is_null() {
        return Err(null("output string"));
    }
    let c = CString::new(s).map_err(|_| invalid("string contains NUL"))?;
    // SAFETY: checked non-null.
    unsafe { *out = c.into_raw() };
    Ok(())
}

fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (WpStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|_| (WpStatus::Parse, format!("{what} is not UTF-8")))
}

fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), (WpStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: checked non-null.
    unsafe { *out = v };
    Ok(())
}

/// Message of the last failed call on this thread, or `NULL`. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn wp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn wp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. `NULL` is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a realization from row-major `A (n x n)`, `B (n x m)`, `C (p x n)`, `D (p x m)`.
///
/// # Safety
/// Each non-empty matrix pointer must reference the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn wp_realization_new(
    n: usize,
    m: usize,
    p: usize,
    a: *const f64,
    b: *const f64,
    c: *const f64,
    d: *const f64,
    out: *mut *mut WpRealization,
) -> WpStatus {
    guard(|| {
        let r = lib(Realization::new(
            read_matrix(a, n, n, "A")?,
            read_matrix(b, n, m, "B")?,
            read_matrix(c, p, n, "C")?,
            read_matrix(d, p, m, "D")?,
        ))?;
        emit_realization(r, out)
    })
}

/// Parses a realization document (`{n, m, p, A, B, C, D}` with `[re, im]` entries).
/// Complex entries with nonzero imaginary part are rejected.
///
/// # Safety
/// `json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wp_realization_from_json(json: *const c_char, out: *mut *mut WpRealization) -> WpStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let doc: io::RealizationDoc = serde_json::from_str(text).map_err(|e| (WpStatus::Parse, e.to_string()))?;
        if !doc.is_real() {
            return Err(invalid("realization has complex entries"));
        }
        emit_realization(lib(doc.to_realization())?, out)
    })
}

/// Serializes a realization; release the string with [`wp_string_free`].
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wp_realization_to_json(r: *const WpRealization, out: *mut *mut c_char) -> WpStatus {
    guard(|| emit_string(lib(io::realization_to_json(realization_ref(r)?))?, out))
}

/// Writes the state, input and output dimensions.
///
/// # Safety
/// `r` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_realization_dims(
    r: *const WpRealization,
    n: *mut usize,
    m: *mut usize,
    p: *mut usize,
) -> WpStatus {
    guard(|| {
        let r = realization_ref(r)?;
        write_out(n, r.n(), "n")?;
        write_out(m, r.m(), "m")?;
        write_out(p, r.p(), "p")
    })
}

/// Releases a realization. `NULL` is ignored.
///
/// # Safety
/// `r` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wp_realization_free(r: *mut WpRealization) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// `G(lambda) = C (lambda - A)^{-1} B + D`, written as `p x m` row-major real
/// and imaginary parts.
///
/// # Safety
/// `r` must be a live handle; `re`, `im` must hold `p * m` doubles.
#[no_mangle]
pub unsafe extern "C" fn wp_transfer(
    r: *const WpRealization,
    lambda_re: f64,
    lambda_im: f64,
    re: *mut f64,
    im: *mut f64,
) -> WpStatus {
    guard(|| {
        let r = realization_ref(r)?;
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        let g = lib(system::transfer(r, Complex64::new(lambda_re, lambda_im)))?;
        write_matrix(&g.map(|z| z.re), re);
        write_matrix(&g.map(|z| z.im), im);
        Ok(())
    })
}

/// Closed loop under output feedback `u = Gamma y + v` with row-major `Gamma (m x p)`.
///
/// # Safety
/// `r` must be a live handle; `gamma` must hold `m * p` doubles.
#[no_mangle]
pub unsafe extern "C" fn wp_closed_loop(
    r: *const WpRealization,
    gamma: *const f64,
    out: *mut *mut WpRealization,
) -> WpStatus {
    guard(|| {
        let r = realization_ref(r)?;
        let fb = lib(FeedbackGain::new(read_matrix(gamma, r.m(), r.p(), "Gamma")?))?;
        emit_realization(lib(closed_loop(r, &fb))?, out)
    })
}

fn horizon(t0: f64, steps: usize) -> Result<TimeGrid, (WpStatus, String)> {
    lib(TimeGrid::new(t0, steps))
}

/// Radius of surjectivity of the input map on `[0, t0]` sampled with `steps`
/// holds, and whether it counts as exactly controllable.
///
/// # Safety
/// `r` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_controllability(
    r: *const WpRealization,
    t0: f64,
    steps: usize,
    sigma_min: *mut f64,
    exact: *mut c_int,
) -> WpStatus {
    guard(|| {
        let rep = lib(gramian::controllability(realization_ref(r)?, &horizon(t0, steps)?, t0))?;
        write_out(sigma_min, rep.sigma_min, "sigma_min")?;
        write_out(exact, c_int::from(rep.exact), "exact")
    })
}

/// Observability constant `k` in `|Psi(t0) x| >= k |x|` and its exactness flag.
///
/// # Safety
/// `r` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_observability(
    r: *const WpRealization,
    t0: f64,
    steps: usize,
    constant: *mut f64,
    exact: *mut c_int,
) -> WpStatus {
    guard(|| {
        let rep = lib(gramian::observability(realization_ref(r)?, &horizon(t0, steps)?, t0))?;
        write_out(constant, rep.sigma_min, "constant")?;
        write_out(exact, c_int::from(rep.exact), "exact")
    })
}

/// `k0 = min{1/|D|, 1/|F|, s0 / (|Phi| |F_P| + s0 |F|)}`; infinite terms are `INFINITY`.
///
/// # Safety
/// `x` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wp_k0_bound(x: *const WpK0Inputs, out: *mut f64) -> WpStatus {
    guard(|| {
        let x = x.as_ref().ok_or_else(|| null("inputs"))?;
        let v = lib(feedback::k0_bound(&K0Inputs {
            t0: x.t0,
            d: x.d,
            f: x.f,
            phi: x.phi,
            f_pert: x.f_pert,
            s0: x.s0,
        }))?;
        write_out(out, v, "output")
    })
}

/// `theta0 = min{1/|D|, 1/|F|, (k - a) / ((k - a)|F| + |F_dC| |Psi|)}`.
///
/// # Safety
/// `x` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wp_theta0_bound(x: *const WpTheta0Inputs, out: *mut f64) -> WpStatus {
    guard(|| {
        let x = x.as_ref().ok_or_else(|| null("inputs"))?;
        let v = lib(feedback::theta0_bound(&Theta0Inputs {
            t0: x.t0,
            d: x.d,
            f: x.f,
            f_pert: x.f_pert,
            psi: x.psi,
            k_obs: x.k_obs,
            alpha0: x.alpha0,
        }))?;
        write_out(out, v, "output")
    })
}

/// Shear-to-tip-slope transfer function of the clamped beam, `s > 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_beam_transfer_h(s: f64, out: *mut f64) -> WpStatus {
    guard(|| write_out(out, lib(beam_transfer_h(s))?, "output"))
}

/// Shear-to-root-curvature transfer function of the clamped beam, `s > 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_beam_transfer_h1(s: f64, out: *mut f64) -> WpStatus {
    guard(|| write_out(out, lib(beam_transfer_h1(s))?, "output"))
}

/// Runs one experiment from a JSON config. On `WP_OK` the report JSON is
/// written to `report` and `passed` is 1 iff every assertion held.
///
/// # Safety
/// `config` must be a NUL-terminated string; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_run_experiment(config: *const c_char, report: *mut *mut c_char, passed: *mut c_int) -> WpStatus {
    guard(|| {
        let cfg = lib(ExperimentConfig::from_json(read_str(config, "config")?))?;
        if report.is_null() || passed.is_null() {
            return Err(null("output"));
        }
        let rep = lib(experiment::run(&cfg))?;
        write_out(passed, c_int::from(rep.passed), "passed")?;
        emit_string(lib(rep.to_json())?, report)
    })
}
