//! C ABI over `circslice`.
//!
//! Every entry point returns a [`CsStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with
//! [`cs_last_error_message`]. Bodies are opaque [`CsBody`] handles created by
//! [`cs_body_from_json`] and released with [`cs_body_free`]. Strings returned
//! by the library are released with [`cs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use circslice::report::{
    emit_body_spec, emit_report, parse_body_spec, run_command, Command, Format, ParsedBody, RunConfig,
};
use circslice::{Direction, Error, Estimate, QuadratureSpec, StarBody};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed body-spec JSON or an unknown command/format name.
    Parse = 3,
    /// The body failed positivity, boundedness or symmetry checks.
    Validation = 4,
    /// A bad argument: direction, quadrature settings, layout mismatch.
    InvalidArgument = 5,
    /// The computation itself failed (non-finite values, oracle failure).
    Computation = 6,
    /// The operation is not defined for this input.
    Unsupported = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

/// Quadrature settings. Start from [`cs_quadrature_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CsQuadrature {
    pub sphere_samples: usize,
    pub circle_nodes: usize,
    pub phase_samples: usize,
    pub seed: u64,
    pub chunk_size: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CsEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CsDefect {
    pub volume: CsEstimate,
    pub functional: CsEstimate,
    pub defect: CsEstimate,
    pub significance: f64,
    pub max_relative_gap: f64,
    pub min_relative_gap: f64,
    /// `|defect| <= 3 std_error`.
    pub circular: bool,
}

/// Opaque body handle.
pub struct CsBody {
    label: String,
    body: StarBody,
}

impl From<CsQuadrature> for QuadratureSpec {
    fn from(q: CsQuadrature) -> Self {
        QuadratureSpec {
            sphere_samples: q.sphere_samples,
            circle_nodes: q.circle_nodes,
            phase_samples: q.phase_samples,
            seed: q.seed,
            chunk_size: q.chunk_size,
        }
    }
}

impl From<Estimate> for CsEstimate {
    fn from(e: Estimate) -> Self {
        CsEstimate { value: e.value, std_error: e.std_error, samples: e.samples }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn status_of(err: &Error) -> CsStatus {
    match err {
        Error::Parse { .. } => CsStatus::Parse,
        Error::Validation(_) | Error::InvalidField { .. } | Error::InvalidBody { .. } => CsStatus::Validation,
        Error::InvalidDirection(_) | Error::InvalidPhase(_) | Error::InvalidSpec(_) | Error::EmptyInput => {
            CsStatus::InvalidArgument
        }
        Error::NonFinite { .. } | Error::Oracle(_) => CsStatus::Computation,
        Error::Precondition(_) | Error::Unsupported(_) => CsStatus::Unsupported,
    }
}

struct Fail(CsStatus, String);

impl From<Error> for Fail {
    fn from(err: Error) -> Self {
        Fail(status_of(&err), err.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CsStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `f`, records any failure and converts panics into [`CsStatus::Panic`].
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> CsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            CsStatus::Ok
        }
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {message}"));
            CsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Fail(CsStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn body_arg<'a>(p: *const CsBody) -> Result<&'a CsBody, Fail> {
    p.as_ref().ok_or_else(|| null("body"))
}

unsafe fn quad_arg(p: *const CsQuadrature) -> Result<QuadratureSpec, Fail> {
    let q: QuadratureSpec = (*p.as_ref().ok_or_else(|| null("quadrature"))?).into();
    q.validate()?;
    Ok(q)
}

unsafe fn direction_arg(body: &StarBody, coords: *const f64, len: usize) -> Result<Direction, Fail> {
    if coords.is_null() {
        return Err(null("direction"));
    }
    let w = std::slice::from_raw_parts(coords, len).to_vec();
    Ok(Direction::normalized(body.layout(), w)?)
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn to_c_string(bytes: Vec<u8>) -> Result<*mut c_char, Fail> {
    let text = CString::new(bytes).map_err(|e| Fail(CsStatus::Computation, e.to_string()))?;
    Ok(text.into_raw())
}

/// Message for the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Default quadrature counts with the given seed.
#[no_mangle]
pub extern "C" fn cs_quadrature_default(seed: u64) -> CsQuadrature {
    let q = QuadratureSpec::with_seed(seed);
    CsQuadrature {
        sphere_samples: q.sphere_samples,
        circle_nodes: q.circle_nodes,
        phase_samples: q.phase_samples,
        seed: q.seed,
        chunk_size: q.chunk_size,
    }
}

/// Parses and validates a body-spec JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_body_from_json(json: *const c_char, out: *mut *mut CsBody) -> CsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(json, "json")?;
        let ParsedBody { label, body } = parse_body_spec(text)?;
        write(out, Box::into_raw(Box::new(CsBody { label, body })), "out")
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `body` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cs_body_free(body: *mut CsBody) {
    if !body.is_null() {
        drop(Box::from_raw(body));
    }
}

/// Serializes the body back to spec JSON (caller frees with [`cs_string_free`]).
///
/// # Safety
/// `body` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cs_body_to_json(body: *const CsBody, out: *mut *mut c_char) -> CsStatus {
    guard(|| {
        let b = body_arg(body)?;
        let text = emit_body_spec(&b.body, Some(&b.label))?;
        write(out, to_c_string(text.into_bytes())?, "out")
    })
}

/// Block count `n` and block dimension `d` (2 or 4).
///
/// # Safety
/// `body` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_body_shape(body: *const CsBody, n: *mut usize, d: *mut usize) -> CsStatus {
    guard(|| {
        let layout = body_arg(body)?.body.layout();
        write(n, layout.blocks(), "n")?;
        write(d, layout.block_dim(), "d")
    })
}

/// Whether the body is circular by construction.
///
/// # Safety
/// `body` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cs_body_known_circular(body: *const CsBody, out: *mut bool) -> CsStatus {
    guard(|| write(out, body_arg(body)?.body.known_circular(), "out"))
}

/// Radial function at `coords` (length `d * n`, normalized internally).
///
/// # Safety
/// `coords` must point at `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_radial(body: *const CsBody, coords: *const f64, len: usize, out: *mut f64) -> CsStatus {
    guard(|| {
        let b = &body_arg(body)?.body;
        let w = direction_arg(b, coords, len)?;
        write(out, b.radial(&w)?, "out")
    })
}

/// Volume by polar-coordinate Monte Carlo.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_volume_polar(
    body: *const CsBody,
    quadrature: *const CsQuadrature,
    out: *mut CsEstimate,
) -> CsStatus {
    guard(|| {
        let b = &body_arg(body)?.body;
        let q = quad_arg(quadrature)?;
        write(out, circslice::volume_polar(b, &q)?.into(), "out")
    })
}

/// Exact volume where one is known; `*known` is false otherwise.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_closed_form_volume(body: *const CsBody, out: *mut f64, known: *mut bool) -> CsStatus {
    guard(|| {
        let v = circslice::closed_form_volume(&body_arg(body)?.body);
        write(known, v.is_some(), "known")?;
        write(out, v.unwrap_or(f64::NAN), "out")
    })
}

/// Measure of the body's section by the line through `coords`.
///
/// # Safety
/// `coords` must point at `len` doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_slice_measure(
    body: *const CsBody,
    coords: *const f64,
    len: usize,
    quadrature: *const CsQuadrature,
    out: *mut f64,
) -> CsStatus {
    guard(|| {
        let b = &body_arg(body)?.body;
        let w = direction_arg(b, coords, len)?;
        let q = quad_arg(quadrature)?;
        write(out, circslice::slice_measure(b, &w, &q)?.value, "out")
    })
}

/// `c_{n,d} E[slice^n]` over random lines.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_theorem1_functional(
    body: *const CsBody,
    quadrature: *const CsQuadrature,
    out: *mut CsEstimate,
) -> CsStatus {
    guard(|| {
        let b = &body_arg(body)?.body;
        let q = quad_arg(quadrature)?;
        write(out, circslice::theorem1_functional(b, &q)?.into(), "out")
    })
}

/// Volume minus the slice functional, from shared samples.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_circularity_defect(
    body: *const CsBody,
    quadrature: *const CsQuadrature,
    out: *mut CsDefect,
) -> CsStatus {
    guard(|| {
        let b = &body_arg(body)?.body;
        let q = quad_arg(quadrature)?;
        let r = circslice::circularity_defect(b, &q)?;
        let circular = r.verdict() == circslice::functionals::DefectVerdict::Circular;
        let d = CsDefect {
            volume: r.volume.into(),
            functional: r.functional.into(),
            defect: r.defect.into(),
            significance: r.significance,
            max_relative_gap: r.max_relative_gap,
            min_relative_gap: r.min_relative_gap,
            circular,
        };
        write(out, d, "out")
    })
}

/// New handle for the phase-averaged body, using the quadrature's phase rule.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_circularize(
    body: *const CsBody,
    quadrature: *const CsQuadrature,
    out: *mut *mut CsBody,
) -> CsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let b = body_arg(body)?;
        let q = quad_arg(quadrature)?;
        let circ = circslice::functionals::circularize_spec(&b.body, &q)?;
        let handle = CsBody { label: format!("circularized_{}", b.label), body: circ };
        write(out, Box::into_raw(Box::new(handle)), "out")
    })
}

/// Runs a report command (`volume`, `slice`, `functional`, `defect`,
/// `circularity`, `compare`, `demo-necessity`, `selfcheck`) over `count`
/// handles and returns the report text in `format` (`table`, `csv`, `json`).
/// `*passed` is false when a self-check fails.
///
/// # Safety
/// `bodies` must point at `count` live handles (may be NULL when `count` is 0);
/// strings must be NUL-terminated; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn cs_run_report(
    command: *const c_char,
    bodies: *const *const CsBody,
    count: usize,
    quadrature: *const CsQuadrature,
    tol: f64,
    format: *const c_char,
    out: *mut *mut c_char,
    passed: *mut bool,
) -> CsStatus {
    guard(|| {
        let command = match str_arg(command, "command")? {
            "volume" => Command::Volume,
            "slice" => Command::Slice,
            "functional" => Command::Functional,
            "defect" => Command::Defect,
            "circularity" => Command::Circularity,
            "compare" => Command::Compare,
            "demo-necessity" => Command::DemoNecessity,
            "selfcheck" => Command::Selfcheck,
            other => return Err(Fail(CsStatus::Parse, format!("unknown command `{other}`"))),
        };
        let format = match str_arg(format, "format")? {
            "table" => Format::Table,
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(Fail(CsStatus::Parse, format!("unknown format `{other}`"))),
        };
        let parsed = if count == 0 {
            Vec::new()
        } else {
            if bodies.is_null() {
                return Err(null("bodies"));
            }
            std::slice::from_raw_parts(bodies, count)
                .iter()
                .map(|&p| body_arg(p).map(|b| ParsedBody { label: b.label.clone(), body: b.body.clone() }))
                .collect::<Result<Vec<_>, Fail>>()?
        };
        let mut config = RunConfig::new(command, 0);
        config.quadrature = quad_arg(quadrature)?;
        config.tol = tol;
        config.format = format;
        config.validate()?;
        let report = run_command(&config, &parsed)?;
        write(passed, report.passed, "passed")?;
        write(out, to_c_string(emit_report(&report, format))?, "out")
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
