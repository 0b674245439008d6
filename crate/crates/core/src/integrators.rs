//! Time integration: the implicit midpoint rule and a passivity-preserving
//! discrete-gradient scheme for systems `ż = −r(η(z)) + B(z)u` with storage
//! `H`, `η = ∇H`.
//!
//! One discrete-gradient step solves
//! `z⁺ = z − Δt·r(η̄(z, z⁺)) + Δt·B((z + z⁺)/2)ū`, which gives the exact
//! per-step balance `(H(z⁺) − H(z))/Δt = −η̄ᵀr(η̄) + ȳᵀū` with `ȳ = B̄ᵀη̄`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::galerkin::{fmt17, Rectangle};
use crate::linalg::solve_linear_vec;
use crate::models::{Plant, StorageFunction};

// ---------------------------------------------------------------------------
// Time grid and trajectories

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.len() < 2 {
            return Err(Error::Config("a time grid needs at least two points".into()));
        }
        if t[0] != 0.0 {
            return Err(Error::Config("time grids start at t = 0".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) || !t.iter().all(|x| x.is_finite()) {
            return Err(Error::Config("time points must be strictly increasing".into()));
        }
        Ok(TimeGrid { t })
    }

    /// `points` equispaced nodes on `[0, horizon]`.
    pub fn uniform(horizon: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::Config(format!(
                "uniform grid needs at least 2 points, got {points}"
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        let last = (points - 1) as f64;
        let mut t: Vec<f64> = (0..points).map(|i| horizon * i as f64 / last).collect();
        t[points - 1] = horizon;
        TimeGrid::new(t)
    }

    /// Uniform grid with `steps` steps of size `dt`.
    pub fn with_step(dt: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(dt > 0.0) {
            return Err(Error::Config(
                "step grid needs dt > 0 and at least one step".into(),
            ));
        }
        TimeGrid::new((0..=steps).map(|i| i as f64 * dt).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.t[self.t.len() - 1]
    }
}

/// Sampled solution. `power_residual[i]` belongs to the step from node `i`
/// to node `i + 1` and is empty for integrators without a power balance.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
    pub storage: Vec<f64>,
    pub power_residual: Vec<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectories are never empty")
    }

    /// CSV with columns `t, z_1..z_n, u_1..u_m, y_1..y_m, H, power_residual`.
    /// Each row's power residual is that of the step ending at the row's node
    /// (`NaN` on the first row and for runs without a balance).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.states[0].len();
        let m = self.inputs.first().map_or(0, |u| u.len());
        let p = self.outputs.first().map_or(0, |y| y.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("z_{i}")));
        header.extend((1..=m).map(|i| format!("u_{i}")));
        header.extend((1..=p).map(|i| format!("y_{i}")));
        header.push("H".into());
        header.push("power_residual".into());
        writeln!(out, "{}", header.join(","))?;
        for (i, t) in self.grid.points().iter().enumerate() {
            let mut row = vec![fmt17(*t)];
            row.extend(self.states[i].iter().map(|x| fmt17(*x)));
            row.extend(self.inputs[i].iter().map(|x| fmt17(*x)));
            row.extend(self.outputs[i].iter().map(|x| fmt17(*x)));
            row.push(fmt17(self.storage[i]));
            let residual = if i == 0 {
                f64::NAN
            } else {
                self.power_residual.get(i - 1).copied().unwrap_or(f64::NAN)
            };
            row.push(fmt17(residual));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Newton

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Stop as soon as the residual norm drops to this level.
    pub tol: f64,
    pub max_iter: usize,
    /// Residual norm that is still accepted once the iteration stagnates
    /// or runs out of steps.
    pub accept: f64,
}

impl NewtonOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        NewtonOptions {
            tol,
            max_iter,
            accept: tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Newton's method for `F(x) = 0`. Without a Jacobian, central finite
/// differences of `F` are used.
pub fn newton_solve<F, J>(
    mut residual: F,
    mut jacobian: Option<J>,
    x0: DVector<f64>,
    opts: NewtonOptions,
) -> Result<NewtonOutcome>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    J: FnMut(&DVector<f64>) -> Result<DMatrix<f64>>,
{
    let mut x = x0;
    let mut r = residual(&x)?;
    let mut norm = r.norm();
    let mut iterations = 0;
    while norm > opts.tol && iterations < opts.max_iter {
        let jac = match jacobian.as_mut() {
            Some(j) => j(&x)?,
            None => fd_jacobian_fallible(&mut residual, &x)?,
        };
        let dx = solve_linear_vec(&jac, &(-&r))?;
        let candidate = &x + dx;
        let r_new = residual(&candidate)?;
        let new_norm = r_new.norm();
        iterations += 1;
        if !new_norm.is_finite() {
            break;
        }
        if new_norm >= norm && norm <= opts.accept {
            // Stagnated at rounding level; keep the better iterate.
            break;
        }
        x = candidate;
        r = r_new;
        norm = new_norm;
    }
    if norm <= opts.tol || norm <= opts.accept {
        Ok(NewtonOutcome {
            x,
            iterations,
            residual_norm: norm,
        })
    } else {
        Err(Error::NewtonDivergence {
            iterations,
            residual_norm: norm,
            last_iterate: x.as_slice().to_vec(),
            hint: String::new(),
        })
    }
}

fn fd_jacobian_fallible<F>(map: &mut F, x: &DVector<f64>) -> Result<DMatrix<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut probe = x.clone();
    let mut jac: Option<DMatrix<f64>> = None;
    for j in 0..x.len() {
        let h = 1e-7 * (1.0 + x[j].abs());
        probe[j] = x[j] + h;
        let fp = map(&probe)?;
        probe[j] = x[j] - h;
        let fm = map(&probe)?;
        probe[j] = x[j];
        let jac = jac.get_or_insert_with(|| DMatrix::zeros(fp.len(), x.len()));
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    Ok(jac.unwrap_or_else(|| DMatrix::zeros(0, 0)))
}

/// Infallible residual adapter for [`newton_solve`] without a Jacobian.
pub fn newton_solve_fd<F>(mut residual: F, x0: DVector<f64>, opts: NewtonOptions) -> Result<NewtonOutcome>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    newton_solve(
        |x: &DVector<f64>| Ok(residual(x)),
        None::<fn(&DVector<f64>) -> Result<DMatrix<f64>>>,
        x0,
        opts,
    )
}

// ---------------------------------------------------------------------------
// Discrete gradient

/// The discrete gradient
/// `η̄(z₁, z₂) = η(z̄) + (H(z₂) − H(z₁) − η(z̄)ᵀΔz)/‖Δz‖² · Δz`, `z̄` the midpoint,
/// which satisfies `H(z₂) − H(z₁) = η̄ᵀ(z₂ − z₁)` exactly. For nearly
/// coincident points the midpoint gradient is returned.
pub fn discrete_gradient(
    storage: &dyn StorageFunction,
    z1: &DVector<f64>,
    z2: &DVector<f64>,
) -> DVector<f64> {
    let diff = z2 - z1;
    let mid = (z1 + z2) * 0.5;
    let eta_mid = storage.gradient(&mid);
    let dist2 = diff.norm_squared();
    if dist2.sqrt() < 1e-12 * (1.0 + z1.norm()) {
        return eta_mid;
    }
    let defect = storage.value(z2) - storage.value(z1) - eta_mid.dot(&diff);
    eta_mid + diff * (defect / dist2)
}

// ---------------------------------------------------------------------------
// Resistive maps

/// A system `ż = −r(η(z)) + B(z)u` with storage `H`.
pub trait PortSystem: Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn storage(&self) -> &dyn StorageFunction;
    fn input_matrix(&self, z: &DVector<f64>) -> DMatrix<f64>;
    /// `r(v)`; `hint` is a state whose gradient is close to `v`.
    fn resistive(&self, v: &DVector<f64>, hint: &DVector<f64>) -> Result<DVector<f64>>;
}

/// Plants with a constant structure `f = (J − R)η`, so `r(v) = (R − J)v`.
pub struct PlantPort<'a> {
    plant: &'a dyn Plant,
    storage: &'a dyn StorageFunction,
    resistive: DMatrix<f64>,
}

impl<'a> PlantPort<'a> {
    pub fn new(plant: &'a dyn Plant) -> Result<Self> {
        let storage = plant
            .storage()
            .ok_or_else(|| Error::Unsupported("plant has no storage function".into()))?;
        let (j, r) = plant
            .ph_structure()
            .ok_or_else(|| Error::Unsupported("plant has no constant port-Hamiltonian structure".into()))?;
        Ok(PlantPort {
            plant,
            storage,
            resistive: r - j,
        })
    }
}

impl PortSystem for PlantPort<'_> {
    fn state_dim(&self) -> usize {
        self.plant.state_dim()
    }
    fn input_dim(&self) -> usize {
        self.plant.input_dim()
    }
    fn storage(&self) -> &dyn StorageFunction {
        self.storage
    }
    fn input_matrix(&self, z: &DVector<f64>) -> DMatrix<f64> {
        self.plant.input_matrix(z)
    }
    fn resistive(&self, v: &DVector<f64>, _hint: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.resistive * v)
    }
}

/// Fixed inner Newton budget for gradient inversion.
pub const GRADIENT_INVERSION_STEPS: usize = 10;
const GRADIENT_INVERSION_TOL: f64 = 1e-11;

/// `r(v) = −f(η⁻¹(v))`, with `η⁻¹(v)` found by Newton on `η(z) − v`
/// (Hessian as Jacobian) started from `hint`.
///
/// Returns `r(v)` and the recovered preimage. Fails when the inversion does
/// not converge or leaves `trust`.
pub fn eval_r<F>(
    storage: &dyn StorageFunction,
    drift: F,
    v: &DVector<f64>,
    hint: &DVector<f64>,
    trust: Option<&Rectangle>,
) -> Result<(DVector<f64>, DVector<f64>)>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let z = invert_gradient(storage, v, hint)?;
    if let Some(region) = trust {
        if z.len() == 2 && !region.contains(&[z[0], z[1]]) {
            return Err(Error::Range(format!(
                "preimage ({:.3e}, {:.3e}) of the gradient lies outside the trust region",
                z[0], z[1]
            )));
        }
    }
    Ok((-drift(&z), z))
}

/// Newton inversion of `η` from `hint` with a fixed step budget.
pub fn invert_gradient(
    storage: &dyn StorageFunction,
    v: &DVector<f64>,
    hint: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut z = hint.clone();
    let mut g = storage.gradient(&z) - v;
    let tol = GRADIENT_INVERSION_TOL * (1.0 + v.norm());
    for _ in 0..GRADIENT_INVERSION_STEPS {
        if g.norm() == 0.0 {
            break;
        }
        let step = solve_linear_vec(&storage.hessian(&z), &(-&g))?;
        let candidate = &z + step;
        let g_new = storage.gradient(&candidate) - v;
        if g_new.norm() > g.norm() && g.norm() <= tol {
            break;
        }
        z = candidate;
        g = g_new;
    }
    let norm = g.norm();
    if !(norm <= tol) {
        return Err(Error::NewtonDivergence {
            iterations: GRADIENT_INVERSION_STEPS,
            residual_norm: norm,
            last_iterate: z.as_slice().to_vec(),
            hint: "; gradient inversion failed, the value function may not be invertible here".into(),
        });
    }
    Ok(z)
}

// ---------------------------------------------------------------------------
// Discrete-gradient step

/// Result of one discrete-gradient step.
#[derive(Debug, Clone)]
pub struct DgStep {
    pub next: DVector<f64>,
    pub eta_bar: DVector<f64>,
    pub resistive: DVector<f64>,
    pub y_bar: DVector<f64>,
    /// `(H(z⁺) − H(z))/Δt + η̄ᵀr(η̄) − ȳᵀū` (absolute).
    pub power_residual: f64,
    pub newton_iterations: usize,
}

const DG_TOL: f64 = 1e-14;
const DG_ACCEPT: f64 = 1e-10;
const DG_MAX_ITER: usize = 50;

fn dg_residual(
    sys: &dyn PortSystem,
    z: &DVector<f64>,
    next: &DVector<f64>,
    u_bar: &DVector<f64>,
    dt: f64,
) -> Result<DVector<f64>> {
    let eta_bar = discrete_gradient(sys.storage(), z, next);
    let mid = (z + next) * 0.5;
    let r = sys.resistive(&eta_bar, &mid)?;
    Ok(next - z + (r - sys.input_matrix(&mid) * u_bar) * dt)
}

/// One step of the discrete-gradient scheme.
pub fn dg_step(sys: &dyn PortSystem, z: &DVector<f64>, u_bar: &DVector<f64>, dt: f64) -> Result<DgStep> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {dt}")));
    }
    let storage = sys.storage();
    let eta = storage.gradient(z);
    let predictor = z + (sys.input_matrix(z) * u_bar - sys.resistive(&eta, z)?) * dt;
    let scale = 1.0 + z.norm();
    let opts = NewtonOptions {
        tol: DG_TOL * scale,
        max_iter: DG_MAX_ITER,
        accept: DG_ACCEPT * scale,
    };
    let outcome = newton_solve(
        |x: &DVector<f64>| dg_residual(sys, z, x, u_bar, dt),
        None::<fn(&DVector<f64>) -> Result<DMatrix<f64>>>,
        predictor,
        opts,
    )
    .map_err(|e| match e {
        Error::NewtonDivergence {
            iterations,
            residual_norm,
            last_iterate,
            ..
        } => Error::NewtonDivergence {
            iterations,
            residual_norm,
            last_iterate,
            hint: format!("; consider reducing the step size below {dt:e}"),
        },
        other => other,
    })?;

    let next = outcome.x;
    let eta_bar = discrete_gradient(storage, z, &next);
    let mid = (z + &next) * 0.5;
    let resistive = sys.resistive(&eta_bar, &mid)?;
    let y_bar = sys.input_matrix(&mid).transpose() * &eta_bar;
    let power_residual =
        (storage.value(&next) - storage.value(z)) / dt + eta_bar.dot(&resistive) - y_bar.dot(u_bar);
    Ok(DgStep {
        next,
        eta_bar,
        resistive,
        y_bar,
        power_residual,
        newton_iterations: outcome.iterations,
    })
}

/// A run that may have stopped early; `trajectory` holds the nodes reached.
#[derive(Debug)]
pub struct Run {
    pub trajectory: Trajectory,
    pub error: Option<Error>,
}

impl Run {
    pub fn into_result(self) -> Result<Trajectory> {
        match self.error {
            None => Ok(self.trajectory),
            Some(e) => Err(e),
        }
    }
}

fn truncated(grid: &TimeGrid, nodes: usize) -> TimeGrid {
    TimeGrid {
        t: grid.t[..nodes].to_vec(),
    }
}

/// Runs the discrete-gradient scheme; power residuals are normalized by
/// `max_j |H(z_{j+1}) − H(z_j)| / Δt_j`.
pub fn simulate_dg(
    sys: &dyn PortSystem,
    grid: &TimeGrid,
    z0: &DVector<f64>,
    input: &dyn Fn(f64) -> DVector<f64>,
) -> Result<Trajectory> {
    run_dg(sys, grid, z0, input)?.into_result()
}

/// [`simulate_dg`] keeping the partial trajectory when a step fails.
pub fn run_dg(
    sys: &dyn PortSystem,
    grid: &TimeGrid,
    z0: &DVector<f64>,
    input: &dyn Fn(f64) -> DVector<f64>,
) -> Result<Run> {
    if z0.len() != sys.state_dim() {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: sys.state_dim(),
            got: z0.len(),
        });
    }
    let t = grid.points();
    let storage = sys.storage();
    let mut states = vec![z0.clone()];
    let mut inputs = vec![input(t[0])];
    if inputs[0].len() != sys.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "input signal",
            expected: sys.input_dim(),
            got: inputs[0].len(),
        });
    }
    let mut raw_residual = Vec::with_capacity(t.len() - 1);
    let mut rates = Vec::with_capacity(t.len() - 1);
    let mut error = None;
    for i in 0..t.len() - 1 {
        let dt = t[i + 1] - t[i];
        let u_next = input(t[i + 1]);
        let u_bar = (&inputs[i] + &u_next) * 0.5;
        let step = match dg_step(sys, &states[i], &u_bar, dt) {
            Ok(step) => step,
            Err(e) => {
                error = Some(e.at_step(i));
                break;
            }
        };
        rates.push(((storage.value(&step.next) - storage.value(&states[i])) / dt).abs());
        raw_residual.push(step.power_residual);
        states.push(step.next);
        inputs.push(u_next);
    }
    let max_rate = rates.iter().copied().fold(0.0, f64::max);
    let power_residual = raw_residual
        .iter()
        .map(|r| {
            if max_rate > 0.0 {
                r.abs() / max_rate
            } else {
                r.abs()
            }
        })
        .collect();
    let outputs = states
        .iter()
        .map(|z| sys.input_matrix(z).transpose() * storage.gradient(z))
        .collect();
    let storage_values = states.iter().map(|z| storage.value(z)).collect();
    Ok(Run {
        trajectory: Trajectory {
            grid: truncated(grid, states.len()),
            states,
            inputs,
            outputs,
            storage: storage_values,
            power_residual,
        },
        error,
    })
}

// ---------------------------------------------------------------------------
// Implicit midpoint

/// A (possibly driven) ODE `ẋ = F(t, x, u)` with observation of plant signals.
pub trait OdeSystem: Sync {
    fn dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn rhs(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    /// `(plant input, plant output, plant storage)` at a state.
    fn observe(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DVector<f64>, DVector<f64>, f64);
}

/// Plant driven by an external input.
pub struct OpenLoop<'a> {
    pub plant: &'a dyn Plant,
}

impl OdeSystem for OpenLoop<'_> {
    fn dim(&self) -> usize {
        self.plant.state_dim()
    }
    fn input_dim(&self) -> usize {
        self.plant.input_dim()
    }
    fn rhs(&self, _t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        self.plant.drift(x) + self.plant.input_matrix(x) * u
    }
    fn observe(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DVector<f64>, DVector<f64>, f64) {
        let h = self.plant.storage().map_or(f64::NAN, |s| s.value(x));
        (u.clone(), self.plant.output(x), h)
    }
}

const MIDPOINT_TOL: f64 = 1e-14;
const MIDPOINT_ACCEPT: f64 = 1e-11;
const MIDPOINT_MAX_ITER: usize = 50;

/// One implicit midpoint step `x⁺ = x + Δt·F(t_mid, (x + x⁺)/2, ū)`.
pub fn midpoint_step<F>(
    rhs: F,
    x: &DVector<f64>,
    t0: f64,
    t1: f64,
    u_bar: &DVector<f64>,
) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>, &DVector<f64>) -> DVector<f64>,
{
    let dt = t1 - t0;
    if !(dt > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {dt}")));
    }
    let t_mid = 0.5 * (t0 + t1);
    let predictor = x + rhs(t0, x, u_bar) * dt;
    let scale = 1.0 + x.norm();
    let opts = NewtonOptions {
        tol: MIDPOINT_TOL * scale,
        max_iter: MIDPOINT_MAX_ITER,
        accept: MIDPOINT_ACCEPT * scale,
    };
    let outcome = newton_solve_fd(
        |next| {
            let mid = (x + next) * 0.5;
            next - x - rhs(t_mid, &mid, u_bar) * dt
        },
        predictor,
        opts,
    )?;
    Ok(outcome.x)
}

/// Implicit midpoint run with input averaging `ū = (u(tᵢ) + u(tᵢ₊₁))/2`.
pub fn simulate_midpoint(
    sys: &dyn OdeSystem,
    grid: &TimeGrid,
    x0: &DVector<f64>,
    input: &dyn Fn(f64) -> DVector<f64>,
) -> Result<Trajectory> {
    run_midpoint(sys, grid, x0, input)?.into_result()
}

/// [`simulate_midpoint`] keeping the partial trajectory when a step fails.
pub fn run_midpoint(
    sys: &dyn OdeSystem,
    grid: &TimeGrid,
    x0: &DVector<f64>,
    input: &dyn Fn(f64) -> DVector<f64>,
) -> Result<Run> {
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: sys.dim(),
            got: x0.len(),
        });
    }
    let t = grid.points();
    let mut states = vec![x0.clone()];
    let mut drive = vec![input(t[0])];
    if drive[0].len() != sys.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "input signal",
            expected: sys.input_dim(),
            got: drive[0].len(),
        });
    }
    let mut error = None;
    for i in 0..t.len() - 1 {
        let u_next = input(t[i + 1]);
        let u_bar = (&drive[i] + &u_next) * 0.5;
        match midpoint_step(
            |tt, xx, uu| sys.rhs(tt, xx, uu),
            &states[i],
            t[i],
            t[i + 1],
            &u_bar,
        ) {
            Ok(next) => states.push(next),
            Err(e) => {
                error = Some(e.at_step(i));
                break;
            }
        }
        drive.push(u_next);
    }
    let mut inputs = Vec::with_capacity(states.len());
    let mut outputs = Vec::with_capacity(states.len());
    let mut storage = Vec::with_capacity(states.len());
    for (x, u) in states.iter().zip(&drive) {
        let (ui, yi, hi) = sys.observe(x, u);
        inputs.push(ui);
        outputs.push(yi);
        storage.push(hi);
    }
    Ok(Run {
        trajectory: Trajectory {
            grid: truncated(grid, states.len()),
            states,
            inputs,
            outputs,
            storage,
            power_residual: Vec::new(),
        },
        error,
    })
}

/// Zero input of dimension `m`.
pub fn zero_input(m: usize) -> impl Fn(f64) -> DVector<f64> {
    move |_| DVector::zeros(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Pendulum, QuadraticEnergy};
    use nalgebra::dmatrix;
    use std::f64::consts::PI;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::uniform(10.0, 1).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0, 1.0]).is_err());
        let g = TimeGrid::uniform(10.0, 500).unwrap();
        assert_eq!(g.len(), 500);
        assert_eq!(g.horizon(), 10.0);
    }

    #[test]
    fn newton_examples() {
        let out = newton_solve(
            |x: &DVector<f64>| Ok(x.map(|t| t - 1.0)),
            Some(|_: &DVector<f64>| Ok(DMatrix::from_element(1, 1, 1.0))),
            v(&[0.0]),
            NewtonOptions::new(1e-14, 20),
        )
        .unwrap();
        assert_eq!(out.x[0], 1.0);
        assert_eq!(out.iterations, 1);

        let out = newton_solve_fd(|x| x.map(|t| t - 1.0), v(&[0.0]), NewtonOptions::new(1e-14, 20)).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-14);

        let out = newton_solve(
            |x: &DVector<f64>| Ok(x.map(|t| t * t - 2.0)),
            Some(|x: &DVector<f64>| Ok(DMatrix::from_element(1, 1, 2.0 * x[0]))),
            v(&[1.0]),
            NewtonOptions::new(1e-12, 6),
        )
        .unwrap();
        assert!((out.x[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!(out.iterations <= 6);
    }

    #[test]
    fn newton_reports_divergence() {
        // x² + 1 has no real root.
        let err = newton_solve_fd(
            |x| x.map(|t| t * t + 1.0),
            v(&[0.5]),
            NewtonOptions::new(1e-12, 20),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NewtonDivergence { .. }));
    }

    #[test]
    fn discrete_gradient_examples() {
        let pend = Pendulum::new(9.81, 0.2);
        let h = pend.storage().unwrap();
        let z = v(&[0.3, -0.4]);
        assert_eq!(discrete_gradient(h, &z, &z), h.gradient(&z));

        let (z1, z2) = (v(&[0.0, 0.0]), v(&[PI, 0.0]));
        let eb = discrete_gradient(h, &z1, &z2);
        assert!((eb.dot(&(&z2 - &z1)) - 19.62).abs() < 1e-12);

        let q = QuadraticEnergy {
            q: dmatrix![2.0, 0.5; 0.5, 1.0],
        };
        let (a, b) = (v(&[0.7, -1.3]), v(&[-2.1, 0.4]));
        let eb = discrete_gradient(&q, &a, &b);
        assert!((eb - &q.q * (&a + &b) * 0.5).norm() < 1e-13);
    }

    #[test]
    fn midpoint_linear_step_matches_cayley() {
        let a = dmatrix![-0.3, 1.0; -2.0, -0.1];
        let x = v(&[1.0, -0.5]);
        let dt = 0.05;
        let got = midpoint_step(|_, y, _| &a * y, &x, 0.0, dt, &v(&[])).unwrap();
        let eye = DMatrix::<f64>::identity(2, 2);
        let cayley = (&eye - &a * (dt / 2.0)).try_inverse().unwrap() * (&eye + &a * (dt / 2.0));
        assert!((got - cayley * x).norm() < 1e-14);

        let still = midpoint_step(|_, y, _| y * 0.0, &v(&[3.0, 4.0]), 0.0, 0.1, &v(&[])).unwrap();
        assert_eq!(still, v(&[3.0, 4.0]));
    }

    #[test]
    fn midpoint_conserves_quadratic_energy() {
        let a = dmatrix![0.0, 1.0; -4.0, 0.0];
        let energy = |x: &DVector<f64>| 4.0 * x[0] * x[0] + x[1] * x[1];
        let mut x = v(&[1.0, 0.3]);
        let e0 = energy(&x);
        for i in 0..500 {
            let t = i as f64 * 0.02;
            x = midpoint_step(|_, y, _| &a * y, &x, t, t + 0.02, &v(&[])).unwrap();
            assert!((energy(&x) - e0).abs() < 1e-12 * e0);
        }
    }

    #[test]
    fn dg_step_keeps_equilibrium() {
        let pend = Pendulum::new(9.81, 0.2);
        let port = PlantPort::new(&pend).unwrap();
        let step = dg_step(&port, &v(&[0.0, 0.0]), &v(&[0.0]), 0.02).unwrap();
        assert_eq!(step.next, v(&[0.0, 0.0]));
    }

    #[test]
    fn uncontrolled_pendulum_energy_decreases() {
        let pend = Pendulum::new(9.81, 0.2);
        let grid = TimeGrid::uniform(10.0, 500).unwrap();
        let traj = simulate_midpoint(
            &OpenLoop { plant: &pend },
            &grid,
            &v(&[PI / 4.0, -1.0]),
            &zero_input(1),
        )
        .unwrap();
        for w in traj.storage.windows(2) {
            assert!(w[1] < w[0]);
        }
        let port = PlantPort::new(&pend).unwrap();
        let traj = simulate_dg(&port, &grid, &v(&[PI / 4.0, -1.0]), &zero_input(1)).unwrap();
        for w in traj.storage.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(traj.power_residual.iter().all(|r| *r < 1e-12));
    }

    #[test]
    fn trajectory_csv_layout() {
        let pend = Pendulum::new(9.81, 0.2);
        let grid = TimeGrid::uniform(1.0, 3).unwrap();
        let port = PlantPort::new(&pend).unwrap();
        let traj = simulate_dg(&port, &grid, &v(&[0.1, 0.0]), &zero_input(1)).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,z_1,z_2,u_1,y_1,H,power_residual");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].ends_with("NaN"));
        assert_eq!(lines[2].split(',').count(), 7);
    }

    #[test]
    fn gradient_inversion_round_trip() {
        let q = QuadraticEnergy {
            q: dmatrix![2.0, 0.5; 0.5, 1.0],
        };
        let target = v(&[0.4, -1.2]);
        let z = invert_gradient(&q, &q.gradient(&target), &v(&[0.0, 0.0])).unwrap();
        assert!((z - target).norm() < 1e-13);
    }
}
