//! C interface to `phcontrol`.
//!
//! Plants, value functions and trajectories cross the boundary as opaque
//! handles released with the matching `*_free`. Matrices are dense row-major
//! `double` arrays. Every fallible call returns a [`PhStatus`]; the message
//! of the last failure on the calling thread is available through
//! [`ph_last_error_message`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::{DMatrix, DVector};
use phcontrol::controllers::{ClosedLoop, Controller, EkfController, PassiveController};
use phcontrol::error::Error;
use phcontrol::experiments::verify_passivity;
use phcontrol::galerkin::{Rectangle, ValueFunctionApprox};
use phcontrol::hjb::{policy_iteration, PolicyIterConfig};
use phcontrol::integrators::{run_midpoint, TimeGrid, Trajectory};
use phcontrol::linalg::solve_care;
use phcontrol::models::{eval_dynamics, LtiPhPlant, Plant, Preset};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Config = 4,
    Dimension = 5,
    Unsupported = 6,
    Numerical = 7,
    NonConvergence = 8,
    NewtonDivergence = 9,
    Range = 10,
    Parse = 11,
    Io = 12,
    Panic = 13,
}

/// Controller selectors for [`ph_simulate`].
pub const PH_CONTROLLER_NONE: u32 = 0;
pub const PH_CONTROLLER_PASSIVE: u32 = 1;
pub const PH_CONTROLLER_EKF: u32 = 2;

/// A control-affine plant.
pub struct PhPlant {
    plant: Box<dyn Plant>,
    preset: Option<Preset>,
}

/// A Galerkin value-function approximation.
pub struct PhValueFunction {
    value: ValueFunctionApprox,
}

/// A sampled trajectory. Closed-loop runs store the stacked plant and
/// controller state.
pub struct PhTrajectory {
    trajectory: Trajectory,
}

struct Failure {
    status: PhStatus,
    message: String,
}

impl Failure {
    fn new(status: PhStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            "config" => PhStatus::Config,
            "dimension_mismatch" => PhStatus::Dimension,
            "unsupported" => PhStatus::Unsupported,
            "non_convergence" => PhStatus::NonConvergence,
            "newton_divergence" => PhStatus::NewtonDivergence,
            "range" => PhStatus::Range,
            "parse" => PhStatus::Parse,
            "io" => PhStatus::Io,
            _ => PhStatus::Numerical,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(PhStatus::Io, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> FfiResult<()>>(f: F) -> PhStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    let failure = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => return PhStatus::Ok,
        Ok(Err(failure)) => failure,
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            Failure::new(PhStatus::Panic, format!("internal panic: {what}"))
        }
    };
    set_last_error(&failure.message);
    failure.status
}

unsafe fn deref<'a, T>(ptr: *const T, what: &str) -> FfiResult<&'a T> {
    ptr.as_ref()
        .ok_or_else(|| Failure::new(PhStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::new(PhStatus::NullPointer, format!("{what} is NULL")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a>(ptr: *mut f64, len: usize, what: &str) -> FfiResult<&'a mut [f64]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::new(PhStatus::NullPointer, format!("{what} is NULL")));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn matrix(ptr: *const f64, rows: usize, cols: usize, what: &str) -> FfiResult<DMatrix<f64>> {
    Ok(DMatrix::from_row_slice(
        rows,
        cols,
        slice(ptr, rows * cols, what)?,
    ))
}

unsafe fn string<'a>(ptr: *const c_char, what: &str) -> FfiResult<&'a str> {
    if ptr.is_null() {
        return Err(Failure::new(PhStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::new(PhStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(Failure::new(PhStatus::NullPointer, format!("{what} is NULL")));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn write_row_major(dst: &mut [f64], m: &DMatrix<f64>) {
    for (k, v) in dst.iter_mut().enumerate() {
        *v = m[(k / m.ncols(), k % m.ncols())];
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ph_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of the calling thread into `buf`,
/// truncating to `len - 1` bytes plus NUL. Returns the untruncated length
/// including the NUL, or 0 when the last call succeeded.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ph_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len) - 1;
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

// ---------------------------------------------------------------------------
// Plants

/// Creates one of the named experiment plants (`"pendulum-paper"`,
/// `"vdp-paper"`, `"ph-counterexample"`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ph_plant_from_preset(name: *const c_char, out: *mut *mut PhPlant) -> PhStatus {
    guard(|| {
        let preset = Preset::from_name(string(name, "name")?)?;
        write_out(
            out,
            PhPlant {
                plant: preset.plant(),
                preset: Some(preset),
            },
            "out",
        )
    })
}

/// Creates the linear plant `ż = (J − R)Qz + Bu`, `y = BᵀQz` with state
/// dimension `n` and `m` inputs. `j`, `r`, `q` are `n×n` and `b` is `n×m`.
///
/// # Safety
/// The matrix pointers must reference arrays of the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn ph_plant_lti(
    n: usize,
    m: usize,
    j: *const f64,
    r: *const f64,
    q: *const f64,
    b: *const f64,
    out: *mut *mut PhPlant,
) -> PhStatus {
    guard(|| {
        if n == 0 || m == 0 {
            return Err(Failure::new(
                PhStatus::InvalidArgument,
                "n and m must be positive",
            ));
        }
        let plant = LtiPhPlant::new(
            matrix(j, n, n, "j")?,
            matrix(r, n, n, "r")?,
            matrix(q, n, n, "q")?,
            matrix(b, n, m, "b")?,
        )?;
        write_out(
            out,
            PhPlant {
                plant: Box::new(plant),
                preset: None,
            },
            "out",
        )
    })
}

/// # Safety
/// `plant` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ph_plant_free(plant: *mut PhPlant) {
    if !plant.is_null() {
        drop(Box::from_raw(plant));
    }
}

/// State and input dimensions.
///
/// # Safety
/// `plant` must be a live handle; `n` and `m` must be writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn ph_plant_dims(plant: *const PhPlant, n: *mut usize, m: *mut usize) -> PhStatus {
    guard(|| {
        let p = &deref(plant, "plant")?.plant;
        if let Some(n) = n.as_mut() {
            *n = p.state_dim();
        }
        if let Some(m) = m.as_mut() {
            *m = p.input_dim();
        }
        Ok(())
    })
}

/// Evaluates `ż = f(z) + B(z)u` and, when `y` is not NULL, the output `h(z)`.
///
/// # Safety
/// `z` and `z_dot` hold `n` doubles, `u` and `y` hold `m`.
#[no_mangle]
pub unsafe extern "C" fn ph_plant_eval(
    plant: *const PhPlant,
    z: *const f64,
    u: *const f64,
    z_dot: *mut f64,
    y: *mut f64,
) -> PhStatus {
    guard(|| {
        let p = deref(plant, "plant")?.plant.as_ref();
        let (n, m) = (p.state_dim(), p.input_dim());
        let z = DVector::from_column_slice(slice(z, n, "z")?);
        let u = DVector::from_column_slice(slice(u, m, "u")?);
        let dz = eval_dynamics(p, &z, &u)?;
        slice_mut(z_dot, n, "z_dot")?.copy_from_slice(dz.as_slice());
        if !y.is_null() {
            let out = p.output(&z);
            slice_mut(y, out.len(), "y")?.copy_from_slice(out.as_slice());
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Value functions

/// Solves the HJB equation of a planar plant by Galerkin policy iteration.
///
/// `degree` is the per-axis Legendre degree and `domain` points to
/// `{x_lo, x_hi, y_lo, y_hi}`. For preset plants `degree = 0` and
/// `domain = NULL` select the reference settings. `iterations` receives the
/// number of policy updates when not NULL.
///
/// # Safety
/// `domain` must be NULL or hold 4 doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ph_solve_hjb(
    plant: *const PhPlant,
    degree: usize,
    domain: *const f64,
    out: *mut *mut PhValueFunction,
    iterations: *mut usize,
) -> PhStatus {
    guard(|| {
        let handle = deref(plant, "plant")?;
        let degree = match (degree, handle.preset) {
            (0, Some(p)) => p.degree(),
            (0, None) => {
                return Err(Failure::new(
                    PhStatus::InvalidArgument,
                    "degree is required for custom plants",
                ))
            }
            (d, _) => d,
        };
        let domain = match (domain.is_null(), handle.preset) {
            (false, _) => {
                let d = slice(domain, 4, "domain")?;
                Rectangle::new(d[0], d[1], d[2], d[3])?
            }
            (true, Some(p)) => p.domain(),
            (true, None) => return Err(Failure::new(PhStatus::NullPointer, "domain is NULL")),
        };
        let report = policy_iteration(handle.plant.as_ref(), &PolicyIterConfig::new(degree, domain))?;
        if let Some(it) = iterations.as_mut() {
            *it = report.iterations;
        }
        write_out(
            out,
            PhValueFunction {
                value: report.value_function,
            },
            "out",
        )
    })
}

/// Loads a value function saved by [`ph_value_function_save`] or by the
/// `solve-hjb` command.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ph_value_function_load(
    path: *const c_char,
    out: *mut *mut PhValueFunction,
) -> PhStatus {
    guard(|| {
        let text = fs::read_to_string(string(path, "path")?)?;
        let value = ValueFunctionApprox::from_csv(&text)?;
        write_out(out, PhValueFunction { value }, "out")
    })
}

/// # Safety
/// `value` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ph_value_function_save(
    value: *const PhValueFunction,
    path: *const c_char,
) -> PhStatus {
    guard(|| {
        let v = &deref(value, "value")?.value;
        fs::write(string(path, "path")?, v.to_csv_string())?;
        Ok(())
    })
}

/// Evaluates `V(z)` and, when `gradient` is not NULL, `∇V(z)`.
///
/// # Safety
/// `z` holds 2 doubles, `gradient` is NULL or holds 2, `out_value` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ph_value_function_eval(
    value: *const PhValueFunction,
    z: *const f64,
    out_value: *mut f64,
    gradient: *mut f64,
) -> PhStatus {
    guard(|| {
        let v = &deref(value, "value")?.value;
        let z = slice(z, 2, "z")?;
        let e = v.eval(&[z[0], z[1]]);
        if out_value.is_null() {
            return Err(Failure::new(PhStatus::NullPointer, "out_value is NULL"));
        }
        *out_value = e.value;
        if !gradient.is_null() {
            slice_mut(gradient, 2, "gradient")?.copy_from_slice(e.gradient.as_slice());
        }
        Ok(())
    })
}

/// # Safety
/// `value` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ph_value_function_free(value: *mut PhValueFunction) {
    if !value.is_null() {
        drop(Box::from_raw(value));
    }
}

// ---------------------------------------------------------------------------
// Simulation

fn uniform_grid(horizon: f64, points: usize) -> FfiResult<TimeGrid> {
    Ok(TimeGrid::uniform(horizon, points)?)
}

/// Integrates the plant in closed loop with the selected controller
/// (`PH_CONTROLLER_*`) by the implicit midpoint rule on `points` uniform
/// nodes of `[0, horizon]`. `z0` is the plant initial state; the
/// controller state starts at the origin. A failure part way through
/// returns the error and no trajectory.
///
/// # Safety
/// `z0` holds `n` doubles; `value` may be NULL only for
/// `PH_CONTROLLER_NONE`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ph_simulate(
    plant: *const PhPlant,
    value: *const PhValueFunction,
    controller: u32,
    z0: *const f64,
    horizon: f64,
    points: usize,
    out: *mut *mut PhTrajectory,
) -> PhStatus {
    guard(|| {
        let p = deref(plant, "plant")?.plant.as_ref();
        let z0 = DVector::from_column_slice(slice(z0, p.state_dim(), "z0")?);
        let grid = uniform_grid(horizon, points)?;
        let ctrl = match controller {
            PH_CONTROLLER_NONE => Controller::None,
            PH_CONTROLLER_PASSIVE => {
                Controller::Passive(PassiveController::new(p, &deref(value, "value")?.value)?)
            }
            PH_CONTROLLER_EKF => Controller::Ekf(EkfController::new(p, &deref(value, "value")?.value)?),
            other => {
                return Err(Failure::new(
                    PhStatus::InvalidArgument,
                    format!("unknown controller {other}"),
                ))
            }
        };
        let cl = ClosedLoop::new(p, ctrl);
        let u = DVector::zeros(0);
        let trajectory = run_midpoint(&cl, &grid, &cl.initial_state(&z0), &|_| u.clone())?.into_result()?;
        write_out(out, PhTrajectory { trajectory }, "out")
    })
}

/// Runs the passive controller alone with zero input from `zh0` using the
/// discrete-gradient scheme. `power_residual` and `storage_increase`
/// receive the largest relative discrete power-balance residual and the
/// largest one-step increase of `V` when not NULL.
///
/// # Safety
/// `zh0` holds 2 doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ph_verify_passivity(
    plant: *const PhPlant,
    value: *const PhValueFunction,
    zh0: *const f64,
    horizon: f64,
    points: usize,
    out: *mut *mut PhTrajectory,
    power_residual: *mut f64,
    storage_increase: *mut f64,
) -> PhStatus {
    guard(|| {
        let p = deref(plant, "plant")?.plant.as_ref();
        let v = &deref(value, "value")?.value;
        let zh0 = DVector::from_column_slice(slice(zh0, 2, "zh0")?);
        let run = verify_passivity(p, v, &zh0, &uniform_grid(horizon, points)?)?;
        if let Some(r) = power_residual.as_mut() {
            *r = run.power.max_abs;
        }
        if let Some(r) = storage_increase.as_mut() {
            *r = run.monotonicity.max_abs;
        }
        let trajectory = run.run.into_result()?;
        write_out(out, PhTrajectory { trajectory }, "out")
    })
}

/// Number of time points.
///
/// # Safety
/// `trajectory` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ph_trajectory_len(trajectory: *const PhTrajectory) -> usize {
    trajectory.as_ref().map_or(0, |t| t.trajectory.states.len())
}

/// Length of each stored state vector.
///
/// # Safety
/// `trajectory` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ph_trajectory_state_dim(trajectory: *const PhTrajectory) -> usize {
    trajectory
        .as_ref()
        .map_or(0, |t| t.trajectory.final_state().len())
}

/// Copies the time points into `times` (capacity `len`).
///
/// # Safety
/// `times` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ph_trajectory_times(
    trajectory: *const PhTrajectory,
    times: *mut f64,
    len: usize,
) -> PhStatus {
    guard(|| {
        let t = deref(trajectory, "trajectory")?.trajectory.grid.points();
        if len < t.len() {
            return Err(Failure::new(
                PhStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", t.len()),
            ));
        }
        slice_mut(times, t.len(), "times")?.copy_from_slice(t);
        Ok(())
    })
}

/// Copies the states row-major (one row per time point) into `states`
/// (capacity `len`).
///
/// # Safety
/// `states` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ph_trajectory_states(
    trajectory: *const PhTrajectory,
    states: *mut f64,
    len: usize,
) -> PhStatus {
    guard(|| {
        let rows = &deref(trajectory, "trajectory")?.trajectory.states;
        let need = rows.len() * rows[0].len();
        if len < need {
            return Err(Failure::new(
                PhStatus::BufferTooSmall,
                format!("need {need} doubles, got {len}"),
            ));
        }
        let dst = slice_mut(states, need, "states")?;
        for (chunk, x) in dst.chunks_exact_mut(rows[0].len()).zip(rows) {
            chunk.copy_from_slice(x.as_slice());
        }
        Ok(())
    })
}

/// Writes the trajectory CSV (`t`, states, inputs, outputs, `H`,
/// `power_residual`).
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ph_trajectory_write_csv(
    trajectory: *const PhTrajectory,
    path: *const c_char,
) -> PhStatus {
    guard(|| {
        let t = &deref(trajectory, "trajectory")?.trajectory;
        let mut buf = Vec::new();
        t.write_csv(&mut buf)?;
        fs::write(string(path, "path")?, buf)?;
        Ok(())
    })
}

/// # Safety
/// `trajectory` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ph_trajectory_free(trajectory: *mut PhTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

// ---------------------------------------------------------------------------
// Riccati

/// Stabilizing solution of `AᵀP + PA − PBBᵀP + CᵀC = 0` with `A` `n×n`,
/// `B` `n×m`, `C` `p×n`. `p_out` receives `P` row-major; `residual`
/// receives the Frobenius norm of the residual when not NULL.
///
/// # Safety
/// The matrix pointers must reference arrays of the stated sizes and
/// `p_out` must hold `n·n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ph_solve_care(
    n: usize,
    m: usize,
    p: usize,
    a: *const f64,
    b: *const f64,
    c: *const f64,
    p_out: *mut f64,
    residual: *mut f64,
) -> PhStatus {
    guard(|| {
        if n == 0 || m == 0 || p == 0 {
            return Err(Failure::new(
                PhStatus::InvalidArgument,
                "dimensions must be positive",
            ));
        }
        let sol = solve_care(
            &matrix(a, n, n, "a")?,
            &matrix(b, n, m, "b")?,
            &matrix(c, p, n, "c")?,
        )?;
        write_row_major(slice_mut(p_out, n * n, "p_out")?, &sol.p);
        if let Some(r) = residual.as_mut() {
            *r = sol.residual_norm;
        }
        Ok(())
    })
}
