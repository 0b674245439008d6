//! Acceptance gate. Every criterion runs at its pinned tolerance and prints a
//! single PASS/FAIL line; the binary exits nonzero when any criterion fails.
//!
//! Run with `cargo test -p phcontrol --test acceptance --release`.

mod common;

use std::f64::consts::{PI, SQRT_2};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{dmatrix, DVector, Vector2};
use phcontrol::diagnostics::{counterexample_check, ph_realizability_lti};
use phcontrol::experiments::{
    convergence_study, final_plant_norm, passivity_initial_state, simulate_closed_loops, verify_passivity,
    ConvergenceConfig,
};
use phcontrol::hjb::{policy_iteration, PolicyIterConfig};
use phcontrol::integrators::{discrete_gradient, TimeGrid};
use phcontrol::linalg::solve_care;
use phcontrol::models::{Pendulum, Plant, Preset, QuadraticEnergy, StorageFunction};
use rand::Rng;

const PI_MAX_ITERATIONS: usize = 10;
const PI_MAX_RUNTIME: Duration = Duration::from_secs(60);
const PI_TOL_ABS: f64 = 1e-14;
const PI_TOL_REL: f64 = 1e-10;
const LQ_ORACLE_REL: f64 = 1e-6;
const LQ_GRID: usize = 100;
const COUNTEREXAMPLE_TOL: f64 = 1e-10;
const DG_PAIRS: usize = 1000;
const DG_REL: f64 = 1e-12;
const DG_ABS: f64 = 1e-13;
const POWER_BALANCE_REL: f64 = 1e-12;
const MONOTONICITY_TOL: f64 = 1e-10;
const ORDER_BAND: (f64, f64) = (1.8, 2.2);
const CARE_SYSTEMS: usize = 50;
const CARE_RESIDUAL: f64 = 1e-10;
const CARE_SCALAR_TOL: f64 = 1e-12;
const PH_PLANTS: usize = 50;
const PH_MIN_EIG: f64 = -1e-10;

const NONLINEAR_PRESETS: [Preset; 2] = [Preset::Pendulum, Preset::VanDerPol];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn policy_iteration_convergence() -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for preset in NONLINEAR_PRESETS {
        let cfg = PolicyIterConfig::new(preset.degree(), preset.domain());
        let started = Instant::now();
        let report = match policy_iteration(preset.plant().as_ref(), &cfg) {
            Ok(r) => r,
            Err(e) => return verdict(false, format!("{}: {e}", preset.name())),
        };
        let elapsed = started.elapsed();
        let (da, dr) = (
            *report.delta_abs_history.last().unwrap(),
            *report.delta_rel_history.last().unwrap(),
        );
        let ok = (da <= PI_TOL_ABS || dr <= PI_TOL_REL)
            && report.iterations < PI_MAX_ITERATIONS
            && elapsed < PI_MAX_RUNTIME;
        pass &= ok;
        detail.push(format!(
            "{} d={}: {} iterations, delta_abs {da:.1e}, delta_rel {dr:.1e}, {:.2} s",
            preset.name(),
            preset.degree(),
            report.iterations,
            elapsed.as_secs_f64()
        ));
    }
    verdict(pass, detail.join("; "))
}

fn lq_oracle_equivalence() -> Verdict {
    let preset = Preset::Counterexample;
    let report = common::solved(preset);
    let care = solve_care(
        &dmatrix![-1.0, -1.0; 1.0, 0.0],
        &dmatrix![1.0; -1.0],
        &dmatrix![1.0, -1.0],
    )
    .expect("oracle CARE");
    let p = care.p;
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for z in preset.domain().grid(LQ_GRID) {
        let exact = &p * DVector::from_column_slice(&z);
        let got = report.value_function.gradient(&z);
        err = err.max((Vector2::new(exact[0], exact[1]) - got).norm());
        scale = scale.max(exact.norm());
    }
    let rel = err / scale;
    verdict(
        rel <= LQ_ORACLE_REL,
        format!("max |grad V - P z| / max |P z| = {rel:.2e} on {LQ_GRID}x{LQ_GRID} grid"),
    )
}

fn counterexample_reproduction() -> Verdict {
    let rep = match counterexample_check() {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let root = 2.0 * (2.0 - SQRT_2).sqrt();
    let (l1, l2) = (-SQRT_2 + root, -SQRT_2 - root);
    let p_err = (&rep.care.p - dmatrix![SQRT_2 - 1.0, 0.0; 0.0, 1.0]).amax();
    let e1 = (rep.lambda1 - l1).abs();
    let e2 = (rep.lambda2 - l2).abs();
    verdict(
        p_err <= COUNTEREXAMPLE_TOL && e1 <= COUNTEREXAMPLE_TOL && e2 <= COUNTEREXAMPLE_TOL,
        format!("P_c deviation {p_err:.1e}, eigenvalue deviations {e1:.1e} and {e2:.1e}"),
    )
}

fn discrete_gradient_identity() -> Verdict {
    let pendulum = Pendulum::new(9.81, 0.2);
    let quadratic = QuadraticEnergy {
        q: dmatrix![2.0, 0.5; 0.5, 1.0],
    };
    let storages: [(&str, &dyn StorageFunction, f64); 4] = [
        ("pendulum energy", pendulum.storage().unwrap(), PI),
        ("quadratic energy", &quadratic, 3.0),
        (
            "pendulum value function",
            common::value_function(Preset::Pendulum),
            2.5,
        ),
        (
            "vdp value function",
            common::value_function(Preset::VanDerPol),
            1.2,
        ),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (k, (name, storage, width)) in storages.into_iter().enumerate() {
        let mut rng = common::rng(0xD6 + k as u64);
        let mut worst = 0.0f64;
        for _ in 0..DG_PAIRS {
            let mut sample = || DVector::from_fn(2, |_, _| rng.random_range(-width..width));
            let (z1, z2) = (sample(), sample());
            let dh = storage.value(&z2) - storage.value(&z1);
            let gap = (dh - discrete_gradient(storage, &z1, &z2).dot(&(&z2 - &z1))).abs();
            worst = worst.max(gap / (dh.abs() * DG_REL + DG_ABS));
        }
        pass &= worst <= 1.0;
        detail.push(format!("{name} {worst:.2}"));
    }
    verdict(
        pass,
        format!(
            "worst gap / (|dH| 1e-12 + 1e-13) over {DG_PAIRS} pairs: {}",
            detail.join(", ")
        ),
    )
}

fn discrete_power_balance() -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for preset in NONLINEAR_PRESETS {
        let plant = preset.plant();
        let grid = TimeGrid::uniform(10.0, 500).unwrap();
        let run = match verify_passivity(
            plant.as_ref(),
            common::value_function(preset),
            &passivity_initial_state(),
            &grid,
        ) {
            Ok(r) => r,
            Err(e) => return verdict(false, format!("{}: {e}", preset.name())),
        };
        let completed = run.run.error.is_none() && run.power.residuals.len() == 499;
        let power = run.power.max_abs;
        let increase = run.monotonicity.max_abs;
        pass &= completed && power < POWER_BALANCE_REL && increase <= MONOTONICITY_TOL;
        detail.push(format!(
            "{}: power residual {power:.1e}, largest storage increase {increase:.1e}",
            preset.name()
        ));
    }
    verdict(pass, detail.join("; "))
}

fn integrator_order() -> Verdict {
    match convergence_study(&ConvergenceConfig::default()) {
        Ok(t) => verdict(
            (ORDER_BAND.0..=ORDER_BAND.1).contains(&t.order),
            format!(
                "fitted order {:.4}, errors {}",
                t.order,
                t.errors
                    .iter()
                    .map(|e| format!("{e:.2e}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
        ),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn care_solver() -> Verdict {
    let mut rng = common::rng(0xCA2E);
    let mut worst = 0.0f64;
    let mut worst_scaled = 0.0f64;
    let mut over = Vec::new();
    for _ in 0..CARE_SYSTEMS {
        let (a, b, c) = common::random_care_system(&mut rng);
        let sol = match solve_care(&a, &b, &c) {
            Ok(sol) => sol,
            Err(e) => return verdict(false, format!("n={}: {e}", a.nrows())),
        };
        worst = worst.max(sol.residual_norm);
        worst_scaled = worst_scaled.max(sol.residual_norm / (1.0 + sol.p.norm_squared()));
        if sol.residual_norm > CARE_RESIDUAL {
            over.push(format!(
                "n={} |P|={:.1e} residual {:.1e}",
                a.nrows(),
                sol.p.norm(),
                sol.residual_norm
            ));
        }
    }
    let scalar = solve_care(&dmatrix![-1.0], &dmatrix![1.0], &dmatrix![1.0]).map(|s| s.p[(0, 0)]);
    let scalar_err = scalar.map_or(f64::INFINITY, |p| (p - (SQRT_2 - 1.0)).abs());
    let mut detail = format!(
        "max residual {worst:.1e} over {CARE_SYSTEMS} systems, max residual/(1+|P|^2) {worst_scaled:.1e}; scalar case error {scalar_err:.1e}"
    );
    if !over.is_empty() {
        detail.push_str(&format!("; above bound: {}", over.join(", ")));
    }
    verdict(worst <= CARE_RESIDUAL && scalar_err <= CARE_SCALAR_TOL, detail)
}

fn closed_loop_efficacy() -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for preset in NONLINEAR_PRESETS {
        let plant = preset.plant();
        let grid = TimeGrid::uniform(10.0, 500).unwrap();
        let runs = match simulate_closed_loops(
            plant.as_ref(),
            common::value_function(preset),
            &preset.initial_state(),
            &grid,
        ) {
            Ok(r) => r,
            Err(e) => return verdict(false, format!("{}: {e}", preset.name())),
        };
        let n = plant.state_dim();
        let base = final_plant_norm(&runs.uncontrolled.trajectory, n);
        for (name, run) in runs.runs().into_iter().skip(1) {
            let ratio = final_plant_norm(&run.trajectory, n) / base;
            let ok = run.error.is_none() && ratio < 1.0;
            pass &= ok;
            detail.push(format!(
                "{} {name} ratio {ratio:.4}{}",
                preset.name(),
                if ok { "" } else { " (not below 1)" }
            ));
        }
    }
    verdict(pass, detail.join("; "))
}

fn ph_realizability() -> Verdict {
    let mut rng = common::rng(0x9E);
    let mut worst = f64::INFINITY;
    for _ in 0..PH_PLANTS {
        let n = rng.random_range(2..=4);
        let plant = common::random_ph_plant(&mut rng, n);
        match ph_realizability_lti(&plant) {
            Ok(r) => worst = worst.min(r.min_eig_r_hat),
            Err(e) => return verdict(false, format!("n={n}: {e}")),
        }
    }
    verdict(
        worst >= PH_MIN_EIG,
        format!("smallest eigenvalue of R_hat over {PH_PLANTS} plants: {worst:.3e}"),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("policy iteration convergence", policy_iteration_convergence),
        ("LQ oracle equivalence", lq_oracle_equivalence),
        ("counterexample reproduction", counterexample_reproduction),
        ("discrete-gradient identity", discrete_gradient_identity),
        ("discrete power balance", discrete_power_balance),
        ("integrator order", integrator_order),
        ("CARE solver", care_solver),
        ("closed-loop efficacy", closed_loop_efficacy),
        ("pH-realizability", ph_realizability),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} {name} [{:.1} s]: {}",
            if v.pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
