//! C ABI over the MHD solver, the flux ledger and the experiment runner.
//!
//! Conventions:
//! * every fallible call returns an [`LpmhdStatus`]; `LPMHD_STATUS_OK` is 0;
//! * on failure the message is kept per thread and read back with
//!   [`lpmhd_last_error_message`];
//! * objects are opaque handles created by `*_new`/`*_load` and released by
//!   the matching `*_free`; passing NULL to a `*_free` is a no-op;
//! * panics never cross the boundary, they surface as `LPMHD_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use lpmhd::experiments::{error_exit_code, run_experiment, ExperimentConfig, ExperimentKind};
use lpmhd::ledger::Ledger;
use lpmhd::lp::DyadicCutoff;
use lpmhd::mhd::{load_checkpoint, orszag_tang, save_checkpoint, MhdState, SolverParams, Stepper};
use lpmhd::spectral::Grid;
use lpmhd::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpmhdStatus {
    Ok = 0,
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Bad parameter, grid or configuration.
    InvalidArgument = 3,
    /// CFL violation, non-convergence or another numerical failure.
    Numerical = 4,
    BlowUp = 5,
    Io = 6,
    Panic = 7,
    /// The caller's buffer is too small; nothing was written.
    BufferTooSmall = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> LpmhdStatus {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Format(_) => LpmhdStatus::Io,
        Error::BlowUp { .. } => LpmhdStatus::BlowUp,
        Error::Config(_)
        | Error::Parameter(_)
        | Error::InvalidGrid(_)
        | Error::GridMismatch(_)
        | Error::OutOfRange(_)
        | Error::Cutoff(_) => LpmhdStatus::InvalidArgument,
        _ => LpmhdStatus::Numerical,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (LpmhdStatus, String)>>(f: F) -> LpmhdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LpmhdStatus::Ok,
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
            LpmhdStatus::Panic
        }
    }
}

fn lib<T>(r: lpmhd::Result<T>) -> Result<T, (LpmhdStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (LpmhdStatus, String) {
    (LpmhdStatus::NullPointer, format!("`{what}` is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (LpmhdStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (LpmhdStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (LpmhdStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (LpmhdStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copies the message of the last failed call on this thread into `buf`
/// (NUL-terminated). `*len` receives the required size including the NUL.
/// Returns `LPMHD_STATUS_BUFFER_TOO_SMALL` if `buf_len` is insufficient;
/// `buf` may be NULL to query the size. With no pending error the message
/// is empty.
///
/// # Safety
/// `buf` must be NULL or valid for `buf_len` bytes; `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_last_error_message(buf: *mut c_char, buf_len: usize, len: *mut usize) -> LpmhdStatus {
    if len.is_null() {
        return LpmhdStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map(|m| m.as_bytes_with_nul()).unwrap_or(b"\0");
        *len = bytes.len();
        if buf.is_null() || buf_len < bytes.len() {
            return LpmhdStatus::BufferTooSmall;
        }
        std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
        LpmhdStatus::Ok
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lpmhd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Velocity and magnetic field of the MHD system at one time.
pub struct LpmhdState(MhdState);

/// A time stepper with fixed viscosity and step size.
pub struct LpmhdStepper(Stepper);

/// Cached ledger weights for one grid and exponent pair `(s, r)`.
pub struct LpmhdLedger(Ledger);

/// Energies and fluxes of the weighted energy balance at one time.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LpmhdRates {
    pub t: f64,
    pub energy_u: f64,
    pub energy_b: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    /// `ν Σ_k W_s(k) |k|² |û_k|²`
    pub dissipation: f64,
    /// `d/dt` of `energy_u` implied by the balance.
    pub du_dt: f64,
    /// `d/dt` of `energy_b` implied by the balance.
    pub db_dt: f64,
}

/// Orszag-Tang initial data on the 2-torus with `n` points per axis.
///
/// # Safety
/// `state` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_state_orszag_tang(n: usize, state: *mut *mut LpmhdState) -> LpmhdStatus {
    guard(|| {
        let slot = out(state, "state")?;
        let grid = lib(Grid::new(2, n))?;
        *slot = Box::into_raw(Box::new(LpmhdState(lib(orszag_tang(&grid))?)));
        Ok(())
    })
}

/// Reads a checkpoint written by [`lpmhd_state_save`] or the CLI.
///
/// # Safety
/// `path` must be a NUL-terminated string; `state` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_state_load(path: *const c_char, state: *mut *mut LpmhdState) -> LpmhdStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let slot = out(state, "state")?;
        *slot = Box::into_raw(Box::new(LpmhdState(lib(load_checkpoint(path.as_ref()))?)));
        Ok(())
    })
}

/// # Safety
/// `state` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_state_save(state: *const LpmhdState, path: *const c_char) -> LpmhdStatus {
    guard(|| {
        let st = handle(state, "state")?;
        let path = str_arg(path, "path")?;
        lib(save_checkpoint(path.as_ref(), &st.0))
    })
}

/// Writes time, energy `‖u‖₂² + ‖b‖₂²` and the larger relative divergence
/// defect `‖∇·f‖₂/‖∇f‖₂` of the two fields.
/// Any output pointer may be NULL.
///
/// # Safety
/// `state` must be a live handle; non-NULL outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_state_info(
    state: *const LpmhdState,
    t: *mut f64,
    energy: *mut f64,
    divergence: *mut f64,
) -> LpmhdStatus {
    guard(|| {
        let st = &handle(state, "state")?.0;
        if let Some(t) = t.as_mut() {
            *t = st.t;
        }
        if let Some(e) = energy.as_mut() {
            *e = st.energy();
        }
        if let Some(d) = divergence.as_mut() {
            *d = st.divergence_defect();
        }
        Ok(())
    })
}

/// # Safety
/// `state` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_state_free(state: *mut LpmhdState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Stepper for `dim`-dimensional grids with `n` points per axis.
///
/// # Safety
/// `stepper` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_stepper_new(
    dim: usize,
    n: usize,
    nu: f64,
    dt: f64,
    stepper: *mut *mut LpmhdStepper,
) -> LpmhdStatus {
    guard(|| {
        let slot = out(stepper, "stepper")?;
        let grid = lib(Grid::new(dim, n))?;
        let params = SolverParams::new(nu, dt);
        lib(params.validate())?;
        *slot = Box::into_raw(Box::new(LpmhdStepper(lib(Stepper::new(&grid, &params))?)));
        Ok(())
    })
}

/// Advances `state` in place by `steps` steps. On failure the state holds
/// the last successful step.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_stepper_advance(
    stepper: *const LpmhdStepper,
    state: *mut LpmhdState,
    steps: usize,
) -> LpmhdStatus {
    guard(|| {
        let stepper = &handle(stepper, "stepper")?.0;
        let st = out(state, "state")?;
        for _ in 0..steps {
            st.0 = lib(stepper.step(&st.0))?;
        }
        Ok(())
    })
}

/// # Safety
/// `stepper` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_stepper_free(stepper: *mut LpmhdStepper) {
    if !stepper.is_null() {
        drop(Box::from_raw(stepper));
    }
}

/// Ledger with the default dyadic cutoff for the exponent pair `(s, r)`.
///
/// # Safety
/// `ledger` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_ledger_new(
    dim: usize,
    n: usize,
    s: f64,
    r: f64,
    ledger: *mut *mut LpmhdLedger,
) -> LpmhdStatus {
    guard(|| {
        let slot = out(ledger, "ledger")?;
        let grid = lib(Grid::new(dim, n))?;
        *slot = Box::into_raw(Box::new(LpmhdLedger(lib(Ledger::new(&grid, &DyadicCutoff::default(), s, r))?)));
        Ok(())
    })
}

/// Evaluates the energy balance of `state` at viscosity `nu`.
///
/// # Safety
/// Handles must be live; `rates` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_ledger_rates(
    ledger: *const LpmhdLedger,
    state: *const LpmhdState,
    nu: f64,
    rates: *mut LpmhdRates,
) -> LpmhdStatus {
    guard(|| {
        let ledger = &handle(ledger, "ledger")?.0;
        let st = &handle(state, "state")?.0;
        let slot = out(rates, "rates")?;
        let r = lib(ledger.rates(st, nu))?;
        *slot = LpmhdRates {
            t: r.t,
            energy_u: r.energy_u,
            energy_b: r.energy_b,
            i1: r.i1,
            i2: r.i2,
            i3: r.i3,
            i4: r.i4,
            dissipation: r.dissipation_exact,
            du_dt: r.du_dt(),
            db_dt: r.db_dt(),
        };
        Ok(())
    })
}

/// `A(t) = ‖u‖²_{H^s} + ‖b‖²_{H^{s+1}}` in block norms.
///
/// # Safety
/// Handles must be live; `a` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_ledger_a(ledger: *const LpmhdLedger, state: *const LpmhdState, a: *mut f64) -> LpmhdStatus {
    guard(|| {
        let ledger = &handle(ledger, "ledger")?.0;
        let st = &handle(state, "state")?.0;
        *out(a, "a")? = ledger.a_of_t(st);
        Ok(())
    })
}

/// # Safety
/// `ledger` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_ledger_free(ledger: *mut LpmhdLedger) {
    if !ledger.is_null() {
        drop(Box::from_raw(ledger));
    }
}

/// Runs one experiment by name (`"lp-verify"`, `"mhd-run"`, …) with a JSON
/// configuration (may be NULL for defaults) and writes its outputs to
/// `output_dir`. `exit_code` receives the code the CLI would exit with.
///
/// # Safety
/// String arguments must be NUL-terminated or (for `config_json`) NULL;
/// `exit_code` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lpmhd_run_experiment(
    name: *const c_char,
    config_json: *const c_char,
    output_dir: *const c_char,
    exit_code: *mut i32,
) -> LpmhdStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let code = out(exit_code, "exit_code")?;
        let kind = ExperimentKind::from_name(name)
            .ok_or_else(|| (LpmhdStatus::InvalidArgument, format!("unknown experiment `{name}`")))?;
        let mut cfg = if config_json.is_null() {
            ExperimentConfig::default()
        } else {
            serde_json::from_str(str_arg(config_json, "config_json")?)
                .map_err(|e| (LpmhdStatus::InvalidArgument, format!("config: {e}")))?
        };
        cfg.output = Some(PathBuf::from(str_arg(output_dir, "output_dir")?));
        match run_experiment(kind, &cfg) {
            Ok(summary) => {
                *code = summary.status.exit_code() as i32;
                Ok(())
            }
            Err(e) => {
                *code = error_exit_code(&e) as i32;
                Err((status_of(&e), e.to_string()))
            }
        }
    })
}
