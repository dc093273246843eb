//! C interface to fockflow.
//!
//! Objects are opaque handles created by `ff_*_new*` functions and released
//! with the matching `ff_*_free`. Every fallible call returns an
//! [`FfStatus`]; on failure a description is available from
//! [`ff_last_error_message`] on the same thread. Complex arrays cross the
//! boundary as separate real and imaginary `double` buffers.
//!
//! # Safety
//!
//! Pointers must be null or valid for the stated length. Handles must come
//! from this library and must not be used after being freed.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use fockflow::circuit::{self, Circuit, TrainingSet};
use fockflow::cli::{read_state, write_state};
use fockflow::evolve::{self, apply_kerr, evolve_single_large_r};
use fockflow::params::compute_cmusigma;
use fockflow::{Error, FockState, GaussianParams, C64};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    Numerical = 4,
    Io = 5,
    Parse = 6,
    Panic = 7,
}

/// A truncated Fock-basis state on one or two modes.
pub struct FfState(FockState);

/// A layered Gaussian + Kerr circuit.
pub struct FfCircuit(Circuit);

/// Parameters of one Gaussian gate. Entries past `modes` are ignored; the
/// beamsplitter angles are read only when `modes == 2`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct FfGate {
    pub modes: usize,
    pub gamma_re: [f64; 2],
    pub gamma_im: [f64; 2],
    pub r: [f64; 2],
    pub delta: [f64; 2],
    pub phi: [f64; 2],
    /// `[theta, varphi]` before the squeezers.
    pub bs_pre: [f64; 2],
    /// `[theta, varphi]` after the squeezers.
    pub bs_post: [f64; 2],
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FfStatus {
    match e {
        Error::ShapeMismatch { .. } | Error::UnsupportedModes(_) | Error::ZeroCutoff => FfStatus::ShapeMismatch,
        Error::NonFinite(_)
        | Error::KlDivergent { .. }
        | Error::NonFiniteGradient { .. }
        | Error::NonFiniteLoss { .. }
        | Error::ImaginaryResidue { .. } => FfStatus::Numerical,
        Error::Io(_) => FfStatus::Io,
        Error::Parse(_) => FfStatus::Parse,
        _ => FfStatus::InvalidArgument,
    }
}

struct Fail(FfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(FfStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FfStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {m}"));
            FfStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

unsafe fn input_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output_slice<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(FfStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

fn check_len(expected: usize, found: usize) -> Result<(), Fail> {
    if expected != found {
        return Err(Fail(
            FfStatus::ShapeMismatch,
            format!("buffer length {found}, expected {expected}"),
        ));
    }
    Ok(())
}

fn gate_params(g: &FfGate) -> Result<GaussianParams, Fail> {
    let m = g.modes;
    let mut p = GaussianParams::identity(m)?;
    for i in 0..m {
        p.gamma[i] = C64::new(g.gamma_re[i], g.gamma_im[i]);
        p.r[i] = g.r[i];
        p.delta[i] = g.delta[i];
        p.phi[i] = g.phi[i];
    }
    if m == 2 {
        p.bs_pre = Some((g.bs_pre[0], g.bs_pre[1]));
        p.bs_post = Some((g.bs_post[0], g.bs_post[1]));
    }
    p.validate()?;
    Ok(p)
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, 0 if there is none.
#[no_mangle]
pub unsafe extern "C" fn ff_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ff_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[no_mangle]
pub unsafe extern "C" fn ff_state_new_vacuum(modes: usize, cutoff: usize, out: *mut *mut FfState) -> FfStatus {
    guard(|| store(out, FfState(FockState::vacuum(modes, cutoff)?)))
}

/// `photons` holds one photon number per mode.
#[no_mangle]
pub unsafe extern "C" fn ff_state_new_fock(
    modes: usize,
    cutoff: usize,
    photons: *const usize,
    out: *mut *mut FfState,
) -> FfStatus {
    guard(|| {
        let k = input_slice(photons, modes, "photons")?;
        if let Some(&n) = k.iter().find(|&&n| n >= cutoff) {
            return Err(Fail(
                FfStatus::InvalidArgument,
                format!("photon number {n} >= cutoff {cutoff}"),
            ));
        }
        store(out, FfState(FockState::fock(modes, cutoff, k)?))
    })
}

/// Build a state from `len = cutoff^modes` amplitudes in row-major order.
#[no_mangle]
pub unsafe extern "C" fn ff_state_new_from_amplitudes(
    modes: usize,
    cutoff: usize,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut FfState,
) -> FfStatus {
    guard(|| {
        let re = input_slice(re, len, "re")?;
        let im = input_slice(im, len, "im")?;
        let amp = re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)).collect();
        store(out, FfState(FockState::new(modes, cutoff, amp)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ff_state_read_file(path: *const c_char, out: *mut *mut FfState) -> FfStatus {
    guard(|| store(out, FfState(read_state(path_arg(path)?)?)))
}

#[no_mangle]
pub unsafe extern "C" fn ff_state_write_file(state: *const FfState, path: *const c_char) -> FfStatus {
    guard(|| {
        let s = deref(state, "state")?;
        Ok(write_state(path_arg(path)?, &s.0)?)
    })
}

/// Release a state. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ff_state_free(state: *mut FfState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of modes, 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn ff_state_modes(state: *const FfState) -> usize {
    state.as_ref().map_or(0, |s| s.0.modes())
}

#[no_mangle]
pub unsafe extern "C" fn ff_state_cutoff(state: *const FfState) -> usize {
    state.as_ref().map_or(0, |s| s.0.cutoff())
}

/// Number of amplitudes, `cutoff^modes`.
#[no_mangle]
pub unsafe extern "C" fn ff_state_len(state: *const FfState) -> usize {
    state.as_ref().map_or(0, |s| s.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn ff_state_norm_sqr(state: *const FfState, out: *mut f64) -> FfStatus {
    guard(|| {
        let s = deref(state, "state")?;
        *output_slice(out, 1, "out")?.first_mut().unwrap() = s.0.norm_sqr();
        Ok(())
    })
}

/// Copy the amplitudes out; `len` must equal [`ff_state_len`].
#[no_mangle]
pub unsafe extern "C" fn ff_state_amplitudes(
    state: *const FfState,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> FfStatus {
    guard(|| {
        let s = deref(state, "state")?;
        check_len(s.0.len(), len)?;
        let re = output_slice(re, len, "re")?;
        let im = output_slice(im, len, "im")?;
        for (i, a) in s.0.amplitudes().iter().enumerate() {
            re[i] = a.re;
            im[i] = a.im;
        }
        Ok(())
    })
}

/// Apply a Gaussian gate with the direct recurrences.
#[no_mangle]
pub unsafe extern "C" fn ff_evolve(gate: *const FfGate, input: *const FfState, out: *mut *mut FfState) -> FfStatus {
    guard(|| {
        let p = gate_params(deref(gate, "gate")?)?;
        let psi = &deref(input, "input")?.0;
        let (res, _) = evolve::evolve(&compute_cmusigma(&p)?, psi)?;
        store(out, FfState(res))
    })
}

/// Single-mode evolution under the large-squeezing approximation.
/// The result is not renormalized.
#[no_mangle]
pub unsafe extern "C" fn ff_evolve_large_r(
    gate: *const FfGate,
    input: *const FfState,
    out: *mut *mut FfState,
) -> FfStatus {
    guard(|| {
        let p = gate_params(deref(gate, "gate")?)?;
        let res = evolve_single_large_r(&p, &deref(input, "input")?.0)?;
        store(out, FfState(res))
    })
}

/// Kerr gates with one strength per mode.
#[no_mangle]
pub unsafe extern "C" fn ff_apply_kerr(
    kappa: *const f64,
    len: usize,
    input: *const FfState,
    out: *mut *mut FfState,
) -> FfStatus {
    guard(|| {
        let k = input_slice(kappa, len, "kappa")?;
        store(out, FfState(apply_kerr(k, &deref(input, "input")?.0)?))
    })
}

/// `layers` identity layers (Gaussian gate, then Kerr).
#[no_mangle]
pub unsafe extern "C" fn ff_circuit_new(
    modes: usize,
    cutoff: usize,
    layers: usize,
    out: *mut *mut FfCircuit,
) -> FfStatus {
    guard(|| store(out, FfCircuit(Circuit::identity(modes, cutoff, layers)?)))
}

#[no_mangle]
pub unsafe extern "C" fn ff_circuit_free(c: *mut FfCircuit) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Length of the flat parameter vector, 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn ff_circuit_num_params(c: *const FfCircuit) -> usize {
    c.as_ref().map_or(0, |c| c.0.num_params())
}

#[no_mangle]
pub unsafe extern "C" fn ff_circuit_get_params(
    c: *const FfCircuit,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> FfStatus {
    guard(|| {
        let c = deref(c, "circuit")?;
        check_len(c.0.num_params(), len)?;
        let re = output_slice(re, len, "re")?;
        let im = output_slice(im, len, "im")?;
        for (i, v) in c.0.params().into_iter().enumerate() {
            re[i] = v.re;
            im[i] = v.im;
        }
        Ok(())
    })
}

/// Overwrite all parameters. Imaginary parts of real coordinates are ignored.
#[no_mangle]
pub unsafe extern "C" fn ff_circuit_set_params(
    c: *mut FfCircuit,
    re: *const f64,
    im: *const f64,
    len: usize,
) -> FfStatus {
    guard(|| {
        let c = c.as_mut().ok_or_else(|| null("circuit"))?;
        check_len(c.0.num_params(), len)?;
        let re = input_slice(re, len, "re")?;
        let im = input_slice(im, len, "im")?;
        let v: Vec<C64> = re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)).collect();
        let mut next = c.0.clone();
        next.set_params(&v)?;
        for l in &next.layers {
            l.gauss.validate()?;
        }
        c.0 = next;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ff_circuit_apply(
    c: *const FfCircuit,
    input: *const FfState,
    out: *mut *mut FfState,
) -> FfStatus {
    guard(|| {
        let c = deref(c, "circuit")?;
        store(out, FfState(circuit::apply(&c.0, &deref(input, "input")?.0)?))
    })
}

/// Fidelity loss `1 - |<target|U|input>|^2` and its gradient. For complex
/// coordinates the gradient is `dL/dxi*`, for real ones `dL/dxi`.
#[no_mangle]
pub unsafe extern "C" fn ff_circuit_fidelity_loss(
    c: *const FfCircuit,
    input: *const FfState,
    target: *const FfState,
    loss: *mut f64,
    grad_re: *mut f64,
    grad_im: *mut f64,
    len: usize,
) -> FfStatus {
    guard(|| {
        let c = deref(c, "circuit")?;
        check_len(c.0.num_params(), len)?;
        let ts = TrainingSet::single(deref(input, "input")?.0.clone(), deref(target, "target")?.0.clone())?;
        let loss = output_slice(loss, 1, "loss")?;
        let gre = output_slice(grad_re, len, "grad_re")?;
        let gim = output_slice(grad_im, len, "grad_im")?;
        let (l, g, _) = circuit::loss_and_gradient(&c.0, &ts, 0.0)?;
        loss[0] = l;
        for (i, v) in g.into_iter().enumerate() {
            gre[i] = v.re;
            gim[i] = v.im;
        }
        Ok(())
    })
}
