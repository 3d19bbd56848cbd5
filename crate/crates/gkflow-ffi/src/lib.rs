//! C ABI for gkflow: opaque state handles, status codes and a thread-local
//! last-error message. Every entry point catches panics.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use gkflow::complex::GKState;
use gkflow::flows::{integrate, FlowProblem, FlowState, FlowStatus, FlowSystem};
use gkflow::recipes::{commuting_gk_torus, flat_kahler_torus, hopf_gk, perturbed_torus, torus_backend};
use gkflow::scenario::{run_scenario, Scenario};
use gkflow::tensor::snapshot::Payload;
use gkflow::tensor::Stencil;
use gkflow::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownName = 3,
    Numerical = 4,
    Io = 5,
    Parse = 6,
    Degenerate = 7,
    Panic = 8,
}

/// Opaque generalized Kähler state.
pub struct GkState {
    inner: GKState,
}

/// Residuals of the generalized Kähler equations.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GkResiduals {
    pub compat_plus: f64,
    pub compat_minus: f64,
    pub nijenhuis_plus: f64,
    pub nijenhuis_minus: f64,
    /// |d^c+ omega+ - H|
    pub r1: f64,
    /// |d^c- omega- + H|
    pub r2: f64,
    /// |dH|
    pub r3: f64,
    pub square_plus: f64,
    pub square_minus: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> GkStatus {
    match e {
        Error::UnknownName(_) => GkStatus::UnknownName,
        Error::Io(_) => GkStatus::Io,
        Error::Parse { .. } | Error::Format(_) => GkStatus::Parse,
        Error::InvalidArgument(_) | Error::Shape(_) | Error::BackendMismatch(_) | Error::TimeGrid(_) => {
            GkStatus::InvalidArgument
        }
        _ => GkStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (GkStatus, String)>) -> GkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GkStatus::Ok
        }
        Ok(Err((s, m))) => {
            set_error(&m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            GkStatus::Panic
        }
    }
}

fn lib<T>(r: gkflow::Result<T>) -> Result<T, (GkStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (GkStatus, String) {
    (GkStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (GkStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (GkStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn gk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a built-in recipe.
///
/// `n` is the grid size per resolved axis (ignored for HOPF_GK). `param` is
/// the amplitude (PERTURBED_TORUS), epsilon (COMMUTING_GK_TORUS) or radius
/// (HOPF_GK), and is ignored for FLAT_KAHLER_TORUS.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gk_state_from_recipe(
    name: *const c_char,
    n: usize,
    param: f64,
    out: *mut *mut GkState,
) -> GkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let name = str_arg(name, "name")?;
        let s = match name {
            "FLAT_KAHLER_TORUS" => lib(flat_kahler_torus(&lib(torus_backend(&[n, n, 1, 1], Stencil::Spectral))?))?,
            "PERTURBED_TORUS" => {
                lib(perturbed_torus(&lib(torus_backend(&[n, n, 1, 1], Stencil::Spectral))?, 1, param))?
            }
            "COMMUTING_GK_TORUS" => lib(commuting_gk_torus([n, 1, n, 1], param, Stencil::Spectral))?,
            "HOPF_GK" => lib(hopf_gk(param))?,
            other => return Err((GkStatus::UnknownName, format!("unknown recipe {other}"))),
        };
        *out = Box::into_raw(Box::new(GkState { inner: s }));
        Ok(())
    })
}

/// Loads a state directory written by [`gk_state_save`] or a scenario snapshot.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gk_state_load(path: *const c_char, out: *mut *mut GkState) -> GkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let s = lib(GKState::load(Path::new(str_arg(path, "path")?)))?;
        *out = Box::into_raw(Box::new(GkState { inner: s }));
        Ok(())
    })
}

/// Writes the state as a directory of text snapshots.
///
/// # Safety
/// `state` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gk_state_save(state: *const GkState, path: *const c_char) -> GkStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        lib(s.inner.save(Path::new(str_arg(path, "path")?), Payload::Text))
    })
}

/// Real dimension and number of sample points.
///
/// # Safety
/// `state` must come from this library; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn gk_state_shape(state: *const GkState, dim: *mut usize, npoints: *mut usize) -> GkStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        if let Some(d) = dim.as_mut() {
            *d = s.inner.g.dim();
        }
        if let Some(p) = npoints.as_mut() {
            *p = s.inner.g.npoints();
        }
        Ok(())
    })
}

/// Residuals of the generalized Kähler equations.
///
/// # Safety
/// `state` must come from this library and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn gk_state_residuals(state: *const GkState, out: *mut GkResiduals) -> GkStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = lib(s.inner.residuals())?;
        *out = GkResiduals {
            compat_plus: r.compat_plus,
            compat_minus: r.compat_minus,
            nijenhuis_plus: r.n_plus,
            nijenhuis_minus: r.n_minus,
            r1: r.r1,
            r2: r.r2,
            r3: r.r3,
            square_plus: r.square_plus,
            square_minus: r.square_minus,
        };
        Ok(())
    })
}

/// Evolves the state in place by GK_COUPLED or GAUGE_FIXED with RK4.
///
/// If `csv_path` is non-null the residual time series is written there. On
/// degeneracy the state is left unchanged and `Degenerate` is returned.
///
/// # Safety
/// `state` must come from this library; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gk_state_flow(
    state: *mut GkState,
    system: *const c_char,
    dt: f64,
    steps: usize,
    csv_path: *const c_char,
) -> GkStatus {
    guard(|| {
        let s = state.as_mut().ok_or_else(|| null("state"))?;
        let system = lib(FlowSystem::parse(str_arg(system, "system")?))?;
        if !matches!(system, FlowSystem::GkCoupled | FlowSystem::GaugeFixed) {
            return Err((GkStatus::InvalidArgument, "only GK_COUPLED and GAUGE_FIXED evolve a full state".into()));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err((GkStatus::InvalidArgument, "dt must be positive".into()));
        }
        let mut p = FlowProblem::new(system, FlowState::from_gk(&s.inner), dt, steps);
        p.snapshot_stride = 0;
        let traj = lib(integrate(&p))?;
        if !csv_path.is_null() {
            let path = str_arg(csv_path, "csv_path")?;
            let mut f = std::io::BufWriter::new(lib(std::fs::File::create(path).map_err(Error::from))?);
            lib(traj.write_csv(&mut f))?;
        }
        if let FlowStatus::Degenerate { step, .. } = traj.status {
            return Err((GkStatus::Degenerate, format!("metric degenerated at step {step}")));
        }
        s.inner = lib(traj.final_state().to_gk())?;
        Ok(())
    })
}

/// Runs a scenario config; artifacts go to `<out_root>/<name>/`.
///
/// `exit_code` receives the CLI exit status of the run (0 pass or expected
/// failure, 1 failed checks, 3 degenerate).
///
/// # Safety
/// Strings must be NUL-terminated; `exit_code` may be null.
#[no_mangle]
pub unsafe extern "C" fn gk_run_scenario(
    config_path: *const c_char,
    out_root: *const c_char,
    exit_code: *mut c_int,
) -> GkStatus {
    guard(|| {
        let cfg = lib(Scenario::load(Path::new(str_arg(config_path, "config_path")?)))?;
        let root = str_arg(out_root, "out_root")?;
        let r = lib(run_scenario(&cfg, Path::new(root)))?;
        if let Some(c) = exit_code.as_mut() {
            *c = r.outcome.exit_code();
        }
        Ok(())
    })
}

/// Releases a state; null is ignored.
///
/// # Safety
/// `state` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gk_state_free(state: *mut GkState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}
