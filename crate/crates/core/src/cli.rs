//! Command-line experiment runner.
//!
//! Every command writes CSV artifacts (17 significant digits) plus a
//! `manifest-<command>.txt` into the output directory. Exit codes: 0 success,
//! 2 configuration error, 3 numerical failure, 4 failed `--check`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Instant;

use crate::config::{parse_domain, ExperimentConfig};
use crate::controllers::{ClosedLoop, Controller, EkfController};
use crate::diagnostics::{
    check_condition_10, compare_maps, controller_dissipation_map, counterexample_check, hjb_residual_map,
    ph_realizability_lti, quadratic_fit_residual, AuditReport,
};
use crate::error::{Error, Result};
use crate::experiments::{
    convergence_study, final_plant_norm, max_controller_norm, passivity_initial_state, simulate_closed_loops,
    verify_passivity,
};
use crate::galerkin::{fmt17, ValueFunctionApprox};
use crate::hjb::{policy_iteration, PolicyIterReport};
use crate::integrators::{TimeGrid, Trajectory};
use crate::linalg::sym_eig;
use crate::models::{counterexample_plant, Plant, Preset};
use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "phcontrol",
    version,
    about = "Passive HJB-based output feedback experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Approximate the value function by Galerkin policy iteration.
    SolveHjb(CommonArgs),
    /// Closed-loop runs: uncontrolled, passive controller, EKF controller.
    Simulate(CommonArgs),
    /// Convergence order of the discrete-gradient scheme on the pendulum.
    Convergence(CommonArgs),
    /// Discrete-gradient run of the controller with zero input and power audits.
    VerifyPassivity(CommonArgs),
    /// The LTI example where the sum of plant and controller storage fails.
    Counterexample(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SolveHjb(_) => "solve-hjb",
            Command::Simulate(_) => "simulate",
            Command::Convergence(_) => "convergence",
            Command::VerifyPassivity(_) => "verify-passivity",
            Command::Counterexample(_) => "counterexample",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::SolveHjb(a)
            | Command::Simulate(a)
            | Command::Convergence(a)
            | Command::VerifyPassivity(a)
            | Command::Counterexample(a) => a,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Plant preset (repeatable); defaults to pendulum-paper and vdp-paper.
    #[arg(long)]
    pub preset: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed recorded in the manifest; all pipelines are deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluate acceptance checks and exit with 4 when one fails.
    #[arg(long)]
    pub check: bool,
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Legendre degree per axis.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Galerkin domain as `x_lo,x_hi,y_lo,y_hi`.
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,
    /// Final time of closed-loop and passivity runs.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Number of time points of closed-loop and passivity runs.
    #[arg(long)]
    pub time_points: Option<usize>,
    /// Value-function CSV to use instead of solving inline.
    #[arg(long)]
    pub value_function: Option<PathBuf>,
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if !self.preset.is_empty() {
            cfg.presets = self
                .preset
                .iter()
                .map(|p| Preset::from_name(p))
                .collect::<Result<_>>()?;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(d) = self.degree {
            cfg.degree = Some(d);
        }
        if let Some(dom) = &self.domain {
            cfg.domain = Some(parse_domain(dom)?);
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(m) = self.time_points {
            cfg.time_points = m;
        }
        if let Some(v) = &self.value_function {
            cfg.value_function = Some(v.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A named pass/fail verdict evaluated under `--check`.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn absorb(&mut self, other: Outcome) {
        self.artifacts.extend(other.artifacts);
        self.summary.push_str(&other.summary);
        self.checks.extend(other.checks);
    }
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_with<F>(path: PathBuf, outcome: &mut Outcome, f: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    write_atomic(&path, &buf)?;
    outcome.artifacts.push(path);
    Ok(())
}

fn load_or_solve(cfg: &ExperimentConfig, preset: Preset, plant: &dyn Plant) -> Result<ValueFunctionApprox> {
    match &cfg.value_function {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ValueFunctionApprox::from_csv(&text)
        }
        None => Ok(policy_iteration(plant, &cfg.policy_config(preset))?.value_function),
    }
}

// ---------------------------------------------------------------------------
// Commands

fn solve_hjb_preset(cfg: &ExperimentConfig, preset: Preset) -> Result<Outcome> {
    let dir = cfg.out.join(preset.name());
    let plant = preset.plant();
    let pcfg = cfg.policy_config(preset);
    let started = Instant::now();
    let report: PolicyIterReport = policy_iteration(plant.as_ref(), &pcfg)?;
    let elapsed = started.elapsed().as_secs_f64();
    let v = &report.value_function;
    let mut out = Outcome::default();

    write_with(dir.join("value_function.csv"), &mut out, |w| v.write_csv(w))?;
    write_with(dir.join("iterations.csv"), &mut out, |w| {
        use std::io::Write;
        writeln!(w, "iteration,delta_abs,delta_rel,hjb_rms")?;
        for k in 0..report.iterations {
            writeln!(
                w,
                "{},{},{},{}",
                k + 1,
                fmt17(report.delta_abs_history[k]),
                fmt17(report.delta_rel_history[k]),
                fmt17(report.hjb_residual_history[k])
            )?;
        }
        Ok(())
    })?;
    let grid = pcfg.domain.grid(pcfg.test_grid_per_axis);
    write_with(dir.join("value_surface.csv"), &mut out, |w| {
        use std::io::Write;
        writeln!(w, "x,y,value,feedback")?;
        for z in &grid {
            let u = crate::controllers::optimal_feedback(v, plant.as_ref(), z);
            writeln!(
                w,
                "{},{},{},{}",
                fmt17(z[0]),
                fmt17(z[1]),
                fmt17(v.value(z)),
                fmt17(u[0])
            )?;
        }
        Ok(())
    })?;
    let hjb = hjb_residual_map(v, plant.as_ref(), &grid, f64::INFINITY);
    write_with(dir.join("hjb_residual.csv"), &mut out, |w| hjb.write_csv(w))?;
    let fit = quadratic_fit_residual(v, &grid)?;

    let _ = writeln!(out.summary, "[{}] solve-hjb", preset.name());
    let _ = writeln!(
        out.summary,
        "  degree {}  domain [{}, {}]x[{}, {}]",
        pcfg.degree, pcfg.domain.x_lo, pcfg.domain.x_hi, pcfg.domain.y_lo, pcfg.domain.y_hi
    );
    let _ = writeln!(
        out.summary,
        "  iterations {}  delta_abs {:.3e}  delta_rel {:.3e}  ({elapsed:.2} s)",
        report.iterations,
        report.delta_abs_history.last().unwrap_or(&f64::NAN),
        report.delta_rel_history.last().unwrap_or(&f64::NAN)
    );
    let _ = writeln!(
        out.summary,
        "  hjb residual max {:.3e}  rms {:.3e}",
        hjb.max_abs, hjb.rms
    );
    let _ = writeln!(out.summary, "  quadratic-fit relative residual {fit:.4}");

    out.checks.push(Check::new(
        format!(
            "{} policy iteration converges in fewer than 10 iterations",
            preset.name()
        ),
        report.iterations < 10,
        format!("{} iterations", report.iterations),
    ));
    if preset == Preset::VanDerPol {
        out.checks.push(Check::new(
            "vdp-paper value function is not quadratic",
            fit > 0.05,
            format!("quadratic-fit residual {fit:.4}"),
        ));
    }
    Ok(out)
}

fn write_trajectory(path: PathBuf, traj: &Trajectory, out: &mut Outcome) -> Result<()> {
    write_with(path, out, |w| traj.write_csv(w))
}

fn simulate_preset(cfg: &ExperimentConfig, preset: Preset) -> Result<Outcome> {
    let dir = cfg.out.join(preset.name());
    let plant = preset.plant();
    let v = load_or_solve(cfg, preset, plant.as_ref())?;
    let grid = TimeGrid::uniform(cfg.horizon, cfg.time_points)?;
    let z0 = preset.initial_state();
    let mut runs = simulate_closed_loops(plant.as_ref(), &v, &z0, &grid)?;
    let n = plant.state_dim();
    let mut out = Outcome::default();
    for (name, run) in runs.runs() {
        write_trajectory(
            dir.join(format!("trajectory_{name}.csv")),
            &run.trajectory,
            &mut out,
        )?;
    }
    for run in [&mut runs.uncontrolled, &mut runs.passive, &mut runs.ekf] {
        if let Some(e) = run.error.take() {
            return Err(e);
        }
    }

    let base = final_plant_norm(&runs.uncontrolled.trajectory, n);
    let rows: Vec<(&str, f64, f64)> = runs
        .runs()
        .iter()
        .map(|(name, run)| {
            (
                *name,
                final_plant_norm(&run.trajectory, n),
                max_controller_norm(&run.trajectory, n),
            )
        })
        .collect();
    write_with(dir.join("closed_loop_summary.csv"), &mut out, |w| {
        use std::io::Write;
        writeln!(
            w,
            "run,final_plant_norm,ratio_to_uncontrolled,max_controller_norm"
        )?;
        for (name, fin, ctrl) in &rows {
            writeln!(w, "{name},{},{},{}", fmt17(*fin), fmt17(fin / base), fmt17(*ctrl))?;
        }
        Ok(())
    })?;

    let ekf_loop = ClosedLoop::new(
        plant.as_ref(),
        Controller::Ekf(EkfController::new(plant.as_ref(), &v)?),
    );
    let (asym, min_eig) = covariance_audit(&ekf_loop, &runs.ekf.trajectory);

    let _ = writeln!(
        out.summary,
        "[{}] simulate (T = {}, {} points)",
        preset.name(),
        cfg.horizon,
        cfg.time_points
    );
    for (name, fin, ctrl) in &rows {
        let _ = writeln!(
            out.summary,
            "  {name:<12} |z(T)| {fin:.4e}  ratio {:.4}  max controller state {ctrl:.4}",
            fin / base
        );
    }
    let _ = writeln!(
        out.summary,
        "  EKF covariance: max asymmetry {asym:.2e}, min eigenvalue {min_eig:.3e}"
    );

    for (name, fin, _) in rows.iter().skip(1) {
        out.checks.push(Check::new(
            format!("{} {name} controller reduces |z(T)|", preset.name()),
            fin < &base,
            format!("ratio {:.4}", fin / base),
        ));
    }
    out.checks.push(Check::new(
        format!("{} EKF covariance stays symmetric PSD", preset.name()),
        asym <= 1e-10 && min_eig >= -1e-8,
        format!("asymmetry {asym:.2e}, min eigenvalue {min_eig:.3e}"),
    ));
    if preset == Preset::Pendulum {
        out.checks.push(Check::new(
            "pendulum-paper EKF controller state exceeds passive controller state",
            rows[2].2 > rows[1].2,
            format!("{:.4} vs {:.4}", rows[2].2, rows[1].2),
        ));
    }
    Ok(out)
}

/// Largest relative asymmetry and smallest eigenvalue of `Π` along a run.
pub fn covariance_audit(cl: &ClosedLoop, traj: &Trajectory) -> (f64, f64) {
    let mut asym = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for x in &traj.states {
        if let Some(pi) = cl.covariance(x) {
            asym = asym.max((&pi - pi.transpose()).amax() / (1.0 + pi.amax()));
            min_eig = min_eig.min(sym_eig(&((&pi + pi.transpose()) * 0.5)).values[0]);
        }
    }
    (asym, min_eig)
}

fn verify_passivity_preset(cfg: &ExperimentConfig, preset: Preset) -> Result<Outcome> {
    let dir = cfg.out.join(preset.name());
    let plant = preset.plant();
    let v = load_or_solve(cfg, preset, plant.as_ref())?;
    let grid = TimeGrid::uniform(cfg.horizon, cfg.time_points)?;
    let result = verify_passivity(plant.as_ref(), &v, &passivity_initial_state(), &grid)?;
    let mut out = Outcome::default();
    write_trajectory(
        dir.join("passivity_trajectory.csv"),
        &result.run.trajectory,
        &mut out,
    )?;
    if let Some(e) = result.run.error {
        return Err(e);
    }
    write_with(dir.join("power_balance.csv"), &mut out, |w| {
        result.power.write_csv(w)
    })?;
    write_with(dir.join("storage_monotonicity.csv"), &mut out, |w| {
        result.monotonicity.write_csv(w)
    })?;
    let test_grid = v.basis.domain.grid(cfg.test_grid);
    let hjb = hjb_residual_map(&v, plant.as_ref(), &test_grid, f64::INFINITY);
    let diss = controller_dissipation_map(&v, plant.as_ref(), &test_grid, f64::INFINITY)?;
    let identity = compare_maps("dissipation identity", &diss, &hjb, 1e-10)?;
    write_with(dir.join("dissipation_identity.csv"), &mut out, |w| {
        identity.write_csv(w)
    })?;

    let _ = writeln!(out.summary, "[{}] verify-passivity", preset.name());
    for r in [&result.power, &result.monotonicity, &identity] {
        let _ = writeln!(out.summary, "{}", indent(&r.to_string()));
    }
    for r in [&result.power, &result.monotonicity, &identity] {
        out.checks.push(audit_check(preset, r));
    }
    Ok(out)
}

fn audit_check(preset: Preset, r: &AuditReport) -> Check {
    Check::new(
        format!("{} {}", preset.name(), r.name),
        r.pass,
        format!("max {:.3e} (tolerance {:.1e})", r.max_abs, r.tolerance),
    )
}

fn indent(s: &str) -> String {
    s.lines().map(|l| format!("  {l}")).collect::<Vec<_>>().join("\n")
}

fn convergence_cmd(cfg: &ExperimentConfig) -> Result<Outcome> {
    let dir = cfg.out.join("convergence");
    let table = convergence_study(&cfg.convergence_config())?;
    let mut out = Outcome::default();
    write_with(dir.join("convergence.csv"), &mut out, |w| {
        use std::io::Write;
        writeln!(w, "dt,error")?;
        for (dt, e) in table.steps.iter().zip(&table.errors) {
            writeln!(w, "{},{}", fmt17(*dt), fmt17(*e))?;
        }
        Ok(())
    })?;
    write_with(dir.join("convergence_fit.csv"), &mut out, |w| {
        use std::io::Write;
        writeln!(w, "quantity,value")?;
        writeln!(w, "order,{}", fmt17(table.order))?;
        writeln!(w, "reference_step,{}", fmt17(cfg.convergence_reference_step))?;
        writeln!(w, "reference_gap,{}", fmt17(table.reference_gap))?;
        Ok(())
    })?;
    let _ = writeln!(
        out.summary,
        "[convergence] pendulum, u(t) = sin t, T = {}",
        cfg.horizon
    );
    for (dt, e) in table.steps.iter().zip(&table.errors) {
        let _ = writeln!(out.summary, "  dt {dt:.1e}  error {e:.4e}");
    }
    let _ = writeln!(out.summary, "  fitted order {:.4}", table.order);
    let _ = writeln!(out.summary, "  reference gap {:.3e}", table.reference_gap);
    out.checks.push(Check::new(
        "fitted order within [1.8, 2.2]",
        (1.8..=2.2).contains(&table.order),
        format!("order {:.4}", table.order),
    ));
    out.checks.push(Check::new(
        "error decreases with the step size",
        table.errors_increase_with_step(),
        "",
    ));
    out.checks.push(Check::new(
        "reference gap below a tenth of the smallest error",
        table.reference_is_valid(),
        format!("gap {:.3e}", table.reference_gap),
    ));
    Ok(out)
}

fn counterexample_cmd(cfg: &ExperimentConfig) -> Result<Outcome> {
    let dir = cfg.out.join("counterexample");
    let rep = counterexample_check()?;
    let plant = counterexample_plant();
    let cond = check_condition_10(&plant);
    let real = ph_realizability_lti(&plant)?;
    let s2 = 2f64.sqrt();
    let l1 = -s2 + 2.0 * (2.0 - s2).sqrt();
    let l2 = -s2 - 2.0 * (2.0 - s2).sqrt();
    let p = &rep.care.p;
    let p_err = (p - nalgebra::dmatrix![s2 - 1.0, 0.0; 0.0, 1.0]).amax();
    let mut out = Outcome::default();
    write_with(dir.join("counterexample.csv"), &mut out, |w| {
        use std::io::Write;
        writeln!(w, "quantity,value")?;
        for (k, v) in [
            ("p_11", p[(0, 0)]),
            ("p_12", p[(0, 1)]),
            ("p_21", p[(1, 0)]),
            ("p_22", p[(1, 1)]),
            ("care_residual", rep.care.residual_norm),
            ("lambda_1", rep.lambda1),
            ("lambda_2", rep.lambda2),
            ("lambda_1_closed_form", l1),
            ("lambda_2_closed_form", l2),
            ("condition_10_min_eigenvalue", cond.eigenvalues[0]),
            ("r_hat_min_eigenvalue", real.min_eig_r_hat),
        ] {
            writeln!(w, "{k},{}", fmt17(v))?;
        }
        Ok(())
    })?;
    let _ = writeln!(out.summary, "[counterexample]");
    let _ = writeln!(out.summary, "{}", indent(&rep.to_string()));
    let _ = writeln!(
        out.summary,
        "  R + BB^T eigenvalues {:?} (condition holds: {})",
        cond.eigenvalues, cond.holds
    );
    let _ = writeln!(
        out.summary,
        "  controller R_hat min eigenvalue {:.6e}",
        real.min_eig_r_hat
    );
    out.checks.push(Check::new(
        "P_c = diag(sqrt2 - 1, 1)",
        p_err <= 1e-10,
        format!("max deviation {p_err:.2e}"),
    ));
    out.checks.push(Check::new(
        "eigenvalues match -sqrt2 +/- 2 sqrt(2 - sqrt2)",
        (rep.lambda1 - l1).abs() <= 1e-10 && (rep.lambda2 - l2).abs() <= 1e-10,
        format!("({:.12}, {:.12})", rep.lambda1, rep.lambda2),
    ));
    out.checks
        .push(Check::new("lambda_1 > 0 > lambda_2", rep.indefinite, ""));
    Ok(out)
}

/// Runs `f` for every selected preset concurrently; results keep preset order.
fn per_preset<F>(cfg: &ExperimentConfig, f: F) -> Result<Outcome>
where
    F: Fn(&ExperimentConfig, Preset) -> Result<Outcome> + Sync,
{
    let presets = cfg.selected_presets();
    let results: Vec<Result<Outcome>> = thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = presets.iter().map(|&p| s.spawn(move || f(cfg, p))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("experiment thread panicked"))
            .collect()
    });
    let mut out = Outcome::default();
    for r in results {
        out.absorb(r?);
    }
    Ok(out)
}

pub fn execute(command: &Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    match command {
        Command::SolveHjb(_) => per_preset(cfg, solve_hjb_preset),
        Command::Simulate(_) => per_preset(cfg, simulate_preset),
        Command::VerifyPassivity(_) => per_preset(cfg, verify_passivity_preset),
        Command::Convergence(_) => convergence_cmd(cfg),
        Command::Counterexample(_) => counterexample_cmd(cfg),
    }
}

fn manifest(
    command: &str,
    cfg: &ExperimentConfig,
    outcome: Option<&Outcome>,
    seconds: f64,
    status: i32,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "command = {command}");
    let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "wall_time_s = {seconds:.3}");
    let _ = writeln!(s, "exit_code = {status}");
    if let Some(o) = outcome {
        for a in &o.artifacts {
            let _ = writeln!(s, "artifact = {}", a.display());
        }
    }
    let _ = writeln!(s, "\n# configuration");
    s.push_str(&cfg.to_text());
    s
}

fn error_record(e: &Error, code: i32) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "kind = {}", e.kind());
    let _ = writeln!(s, "exit_code = {code}");
    if let Some(step) = e.step() {
        let _ = writeln!(s, "step = {step}");
    }
    let _ = writeln!(s, "message = {e}");
    s
}

fn exit_code_for(e: &Error) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERICAL
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let name = cli.command.name();
    let common = cli.command.args();
    let cfg = match common.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!(
                "error: {}",
                error_record(&e, EXIT_CONFIG).trim_end().replace('\n', "; ")
            );
            return EXIT_CONFIG;
        }
    };
    let started = Instant::now();
    let result = execute(&cli.command, &cfg);
    let seconds = started.elapsed().as_secs_f64();
    let manifest_path = cfg.out.join(format!("manifest-{name}.txt"));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            let mut code = EXIT_OK;
            if common.check {
                println!("checks:");
                for c in &outcome.checks {
                    println!(
                        "  {} {}{}",
                        if c.pass { "PASS" } else { "FAIL" },
                        c.name,
                        if c.detail.is_empty() {
                            String::new()
                        } else {
                            format!(" ({})", c.detail)
                        }
                    );
                }
                if outcome.checks.iter().any(|c| !c.pass) {
                    code = EXIT_CHECK;
                }
            }
            if let Err(e) = write_atomic(
                &manifest_path,
                manifest(name, &cfg, Some(&outcome), seconds, code).as_bytes(),
            ) {
                eprintln!("error: cannot write manifest: {e}");
                return EXIT_NUMERICAL;
            }
            code
        }
        Err(e) => {
            let code = exit_code_for(&e);
            let record = error_record(&e, code);
            eprintln!("error: {}", record.trim_end().replace('\n', "; "));
            let _ = write_atomic(&cfg.out.join(format!("error-{name}.txt")), record.as_bytes());
            let _ = write_atomic(
                &manifest_path,
                manifest(name, &cfg, None, seconds, code).as_bytes(),
            );
            code
        }
    }
}
