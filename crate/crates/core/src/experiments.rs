//! End-to-end experiment pipelines shared by the command-line runner and the
//! test suites.

use std::f64::consts::FRAC_PI_4;
use std::thread;

use nalgebra::DVector;

use crate::controllers::{ClosedLoop, Controller, EkfController, PassiveController, TRUST_FACTOR};
use crate::diagnostics::{power_balance, storage_monotonicity, AuditReport};
use crate::error::{Error, Result};
use crate::galerkin::ValueFunctionApprox;
use crate::integrators::{
    run_dg, run_midpoint, simulate_dg, simulate_midpoint, zero_input, OpenLoop, PlantPort, Run, TimeGrid,
    Trajectory,
};
use crate::models::{Pendulum, Plant};

/// Horizon of all closed-loop and passivity runs.
pub const HORIZON: f64 = 10.0;
/// Time points per closed-loop and passivity run.
pub const TIME_POINTS: usize = 500;

/// Closed-loop runs from one plant initial state.
#[derive(Debug)]
pub struct ClosedLoopRuns {
    pub uncontrolled: Run,
    pub passive: Run,
    pub ekf: Run,
}

impl ClosedLoopRuns {
    pub fn runs(&self) -> [(&'static str, &Run); 3] {
        [
            ("uncontrolled", &self.uncontrolled),
            ("passive", &self.passive),
            ("ekf", &self.ekf),
        ]
    }
}

/// Norm of the plant part of the final stacked state.
pub fn final_plant_norm(traj: &Trajectory, n: usize) -> f64 {
    traj.final_state().rows(0, n).norm()
}

/// Largest controller-state norm along a stacked closed-loop trajectory.
pub fn max_controller_norm(traj: &Trajectory, n: usize) -> f64 {
    traj.states
        .iter()
        .filter(|x| x.len() >= 2 * n)
        .map(|x| x.rows(n, n).norm())
        .fold(0.0, f64::max)
}

/// Uncontrolled, passive-controller and EKF-controller runs, integrated
/// concurrently with the implicit midpoint rule.
pub fn simulate_closed_loops(
    plant: &dyn Plant,
    value: &ValueFunctionApprox,
    z0: &DVector<f64>,
    grid: &TimeGrid,
) -> Result<ClosedLoopRuns> {
    let passive = PassiveController::new(plant, value)?;
    let ekf = EkfController::new(plant, value)?;
    let loops = [
        ClosedLoop::new(plant, Controller::None),
        ClosedLoop::new(plant, Controller::Passive(passive)),
        ClosedLoop::new(plant, Controller::Ekf(ekf)),
    ];
    let mut runs: Vec<Result<Run>> = thread::scope(|s| {
        let handles: Vec<_> = loops
            .iter()
            .map(|cl| s.spawn(move || run_midpoint(cl, grid, &cl.initial_state(z0), &zero_input(0))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let ekf = runs.pop().expect("three runs")?;
    let passive = runs.pop().expect("three runs")?;
    let uncontrolled = runs.pop().expect("three runs")?;
    Ok(ClosedLoopRuns {
        uncontrolled,
        passive,
        ekf,
    })
}

/// Discrete-gradient run of the passive controller on its own.
#[derive(Debug)]
pub struct PassivityRun {
    pub run: Run,
    pub power: AuditReport,
    pub monotonicity: AuditReport,
}

pub const POWER_BALANCE_TOL: f64 = 1e-12;
pub const MONOTONICITY_TOL: f64 = 1e-10;

/// Runs the controller with `û ≡ 0` from `ẑ₀` and audits the discrete power
/// balance and the decay of `V(ẑ)`.
pub fn verify_passivity(
    plant: &dyn Plant,
    value: &ValueFunctionApprox,
    zh0: &DVector<f64>,
    grid: &TimeGrid,
) -> Result<PassivityRun> {
    let ctrl = PassiveController::new(plant, value)?;
    let port = ctrl.port(TRUST_FACTOR);
    let run = run_dg(&port, grid, zh0, &zero_input(plant.input_dim()))?;
    let power = power_balance(&run.trajectory, POWER_BALANCE_TOL);
    let monotonicity = storage_monotonicity(&run.trajectory, MONOTONICITY_TOL);
    Ok(PassivityRun {
        run,
        power,
        monotonicity,
    })
}

/// Controller initial state of the passivity runs.
pub fn passivity_initial_state() -> DVector<f64> {
    DVector::from_vec(vec![1.0, 1.0])
}

// ---------------------------------------------------------------------------
// Convergence study

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub steps: Vec<f64>,
    pub reference_step: f64,
    pub horizon: f64,
    pub initial_state: DVector<f64>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            steps: vec![1e-3, 2e-3, 4e-3, 8e-3],
            reference_step: 1e-3 / 8.0,
            horizon: HORIZON,
            initial_state: DVector::from_vec(vec![FRAC_PI_4, -1.0]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log(error)` against `log(Δt)`.
    pub order: f64,
    /// Maximum nodal distance between references at `Δt_ref` and `Δt_ref/2`.
    pub reference_gap: f64,
}

impl ConvergenceTable {
    pub fn errors_increase_with_step(&self) -> bool {
        let mut pairs: Vec<(f64, f64)> = self
            .steps
            .iter()
            .copied()
            .zip(self.errors.iter().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.windows(2).all(|w| w[1].1 > w[0].1)
    }

    pub fn reference_is_valid(&self) -> bool {
        let smallest = self.errors.iter().copied().fold(f64::INFINITY, f64::min);
        self.reference_gap < smallest / 10.0
    }
}

fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    let count = (horizon / dt).round();
    if !(count >= 1.0) || ((count * dt) - horizon).abs() > 1e-9 * horizon {
        return Err(Error::Config(format!(
            "step {dt:e} does not divide the horizon {horizon}"
        )));
    }
    Ok(count as usize)
}

/// Maximum over the coarse nodes of `‖z_coarse(t) − z_fine(t)‖`.
fn nodal_distance(coarse: &Trajectory, fine: &Trajectory) -> Result<f64> {
    let (nc, nf) = (coarse.states.len() - 1, fine.states.len() - 1);
    if nf % nc != 0 {
        return Err(Error::Config("step sizes are not nested".into()));
    }
    let ratio = nf / nc;
    Ok(coarse
        .states
        .iter()
        .enumerate()
        .map(|(i, z)| (z - &fine.states[i * ratio]).norm())
        .fold(0.0, f64::max))
}

/// Error of the discrete-gradient scheme on the pendulum driven by
/// `u(t) = sin t`, measured against fine implicit-midpoint references.
pub fn convergence_study(cfg: &ConvergenceConfig) -> Result<ConvergenceTable> {
    if cfg.steps.len() < 2 {
        return Err(Error::Config(
            "convergence study needs at least two step sizes".into(),
        ));
    }
    let plant = Pendulum::new(9.81, 0.2);
    let input = |t: f64| DVector::from_element(1, t.sin());
    let port = PlantPort::new(&plant)?;
    let open = OpenLoop { plant: &plant };

    let mut grids = Vec::new();
    for &dt in &cfg.steps {
        grids.push(TimeGrid::with_step(dt, step_count(cfg.horizon, dt)?)?);
    }
    let ref_grid = TimeGrid::with_step(cfg.reference_step, step_count(cfg.horizon, cfg.reference_step)?)?;
    let half_step = cfg.reference_step / 2.0;
    let half_grid = TimeGrid::with_step(half_step, step_count(cfg.horizon, half_step)?)?;

    let z0 = &cfg.initial_state;
    let (levels, reference, half) = thread::scope(|s| {
        let levels: Vec<_> = grids
            .iter()
            .map(|g| {
                let port = &port;
                let input = &input;
                s.spawn(move || simulate_dg(port, g, z0, input))
            })
            .collect();
        let reference = s.spawn(|| simulate_midpoint(&open, &ref_grid, z0, &input));
        let half = s.spawn(|| simulate_midpoint(&open, &half_grid, z0, &input));
        (
            levels
                .into_iter()
                .map(|h| h.join().expect("convergence thread panicked"))
                .collect::<Vec<_>>(),
            reference.join().expect("reference thread panicked"),
            half.join().expect("reference thread panicked"),
        )
    });
    let reference = reference?;
    let half = half?;
    let mut errors = Vec::with_capacity(levels.len());
    for level in levels {
        errors.push(nodal_distance(&level?, &reference)?);
    }
    let reference_gap = nodal_distance(&reference, &half)?;
    let order = fitted_slope(&cfg.steps, &errors);
    Ok(ConvergenceTable {
        steps: cfg.steps.clone(),
        errors,
        order,
        reference_gap,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [1e-3, 2e-3, 4e-3, 8e-3];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v * v).collect();
        assert!((fitted_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn step_count_requires_divisibility() {
        assert_eq!(step_count(10.0, 1e-3).unwrap(), 10_000);
        assert!(step_count(10.0, 3.0).is_err());
    }
}
