//! Passivity, HJB and structure audits.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::controllers::PassiveController;
use crate::error::{Error, Result};
use crate::galerkin::{fmt17, ValueFunctionApprox};
use crate::hjb::hjb_residual_at;
use crate::integrators::Trajectory;
use crate::linalg::{inverse, skew_part, solve_care, sym_eig, sym_part, CareSolution};
use crate::models::{counterexample_plant, LtiPhPlant, Pendulum, Plant, StorageFunction};

/// Pointwise residuals over a sample set with a pass/fail verdict.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub name: String,
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub rms: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl AuditReport {
    pub fn new(name: impl Into<String>, points: Vec<Vec<f64>>, residuals: Vec<f64>, tolerance: f64) -> Self {
        let count = residuals.len().max(1) as f64;
        let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let mean_abs = residuals.iter().map(|r| r.abs()).sum::<f64>() / count;
        let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / count).sqrt();
        let pass = residuals.iter().all(|r| r.is_finite()) && max_abs <= tolerance;
        AuditReport {
            name: name.into(),
            points,
            residuals,
            max_abs,
            mean_abs,
            rms,
            tolerance,
            pass,
        }
    }

    /// CSV with one row per sample: coordinates `x_1..x_k` then `residual`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let k = self.points.first().map_or(0, |p| p.len());
        let mut header: Vec<String> = (1..=k).map(|i| format!("x_{i}")).collect();
        header.push("residual".into());
        writeln!(out, "{}", header.join(","))?;
        for (p, r) in self.points.iter().zip(&self.residuals) {
            let mut row: Vec<String> = p.iter().map(|x| fmt17(*x)).collect();
            row.push(fmt17(*r));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}] {}", if self.pass { "PASS" } else { "FAIL" }, self.name)?;
        writeln!(f, "  samples   {}", self.residuals.len())?;
        writeln!(f, "  max |r|   {:.3e}", self.max_abs)?;
        writeln!(f, "  mean |r|  {:.3e}", self.mean_abs)?;
        writeln!(f, "  rms       {:.3e}", self.rms)?;
        write!(f, "  tolerance {:.3e}", self.tolerance)
    }
}

// ---------------------------------------------------------------------------
// Dissipation certificates

pub type VectorMap<'a> = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'a>;

/// A map `ℓ` with `η(z)ᵀf(z) = −ℓ(z)ᵀℓ(z)` for some storage gradient `η`.
pub struct LureCertificate<'a> {
    pub ell: VectorMap<'a>,
    pub p: usize,
}

impl LureCertificate<'_> {
    /// `η(z)ᵀf(z) + ‖ℓ(z)‖²`, zero when the certificate is exact.
    pub fn defect(&self, eta: &DVector<f64>, drift: &DVector<f64>, z: &DVector<f64>) -> f64 {
        eta.dot(drift) + (self.ell)(z).norm_squared()
    }
}

/// `ℓ(z) = √λ·z₂` for the damped pendulum.
pub fn pendulum_certificate(p: &Pendulum) -> LureCertificate<'static> {
    let s = p.friction.sqrt();
    LureCertificate {
        ell: Box::new(move |z| DVector::from_element(1, s * z[1])),
        p: 1,
    }
}

/// `ℓ(z) = R^{1/2}Qz` for an LTI pH plant.
pub fn lti_certificate(plant: &LtiPhPlant) -> LureCertificate<'static> {
    let eig = sym_eig(plant.r());
    let sqrt_r = &eig.vectors
        * DMatrix::from_diagonal(&eig.values.map(|l| l.max(0.0).sqrt()))
        * eig.vectors.transpose();
    let m = sqrt_r * plant.q();
    let p = m.nrows();
    LureCertificate {
        ell: Box::new(move |z| &m * z),
        p,
    }
}

/// `ℓ̂ = (h + Bᵀη_c)/√2` for the passive controller.
pub fn controller_certificate<'a>(ctrl: PassiveController<'a>) -> LureCertificate<'a> {
    let p = ctrl.plant.input_dim();
    LureCertificate {
        ell: Box::new(move |z| ctrl.certificate(z)),
        p,
    }
}

// ---------------------------------------------------------------------------
// Residual maps

fn grid_points(grid: &[[f64; 2]]) -> Vec<Vec<f64>> {
    grid.iter().map(|z| z.to_vec()).collect()
}

/// `η_cᵀf − ½η_cᵀBBᵀη_c + ½hᵀh` on `grid`.
pub fn hjb_residual_map(
    value: &ValueFunctionApprox,
    plant: &dyn Plant,
    grid: &[[f64; 2]],
    tolerance: f64,
) -> AuditReport {
    let residuals = grid.iter().map(|z| hjb_residual_at(plant, value, z)).collect();
    AuditReport::new("hjb residual", grid_points(grid), residuals, tolerance)
}

/// `η_cᵀf̂ + ‖ℓ̂‖²` on `grid`.
pub fn controller_dissipation_map(
    value: &ValueFunctionApprox,
    plant: &dyn Plant,
    grid: &[[f64; 2]],
    tolerance: f64,
) -> Result<AuditReport> {
    let ctrl = PassiveController::new(plant, value)?;
    let cert = controller_certificate(ctrl);
    let residuals = grid
        .iter()
        .map(|z| {
            let zv = DVector::from_column_slice(z);
            let g = value.gradient(z);
            let eta = DVector::from_column_slice(g.as_slice());
            cert.defect(&eta, &ctrl.modified_drift(&zv), &zv)
        })
        .collect();
    Ok(AuditReport::new(
        "controller dissipation",
        grid_points(grid),
        residuals,
        tolerance,
    ))
}

/// Pointwise difference of two maps over the same grid.
pub fn compare_maps(name: &str, a: &AuditReport, b: &AuditReport, tolerance: f64) -> Result<AuditReport> {
    if a.residuals.len() != b.residuals.len() {
        return Err(Error::DimensionMismatch {
            what: "audit samples",
            expected: a.residuals.len(),
            got: b.residuals.len(),
        });
    }
    let residuals = a.residuals.iter().zip(&b.residuals).map(|(x, y)| x - y).collect();
    Ok(AuditReport::new(name, a.points.clone(), residuals, tolerance))
}

// ---------------------------------------------------------------------------
// LTI structure checks

#[derive(Debug, Clone)]
pub struct Condition10 {
    pub holds: bool,
    /// Eigenvalues of `R + BBᵀ`, ascending.
    pub eigenvalues: Vec<f64>,
}

/// Whether `R + BBᵀ ≻ 0`.
pub fn check_condition_10(plant: &LtiPhPlant) -> Condition10 {
    let s = plant.r() + plant.b() * plant.b().transpose();
    let eigenvalues: Vec<f64> = sym_eig(&s).values.iter().copied().collect();
    let scale = 1.0 + s.norm();
    Condition10 {
        holds: eigenvalues[0] > 1e-12 * scale,
        eigenvalues,
    }
}

#[derive(Debug, Clone)]
pub struct CounterexampleReport {
    pub q: DMatrix<f64>,
    pub care: CareSolution,
    /// Largest eigenvalue of `Aᵀ(P_c+Q) + (P_c+Q)A`.
    pub lambda1: f64,
    /// Smallest eigenvalue of the same matrix.
    pub lambda2: f64,
    pub indefinite: bool,
}

/// Shows that `P_c + Q` need not certify the closed loop `A` even though
/// both the plant and the controller are passive.
pub fn counterexample_check() -> Result<CounterexampleReport> {
    let plant = counterexample_plant();
    let care = solve_care(plant.a(), plant.b(), plant.c())?;
    let s = &care.p + plant.q();
    let m = plant.a().transpose() * &s + &s * plant.a();
    let eig = sym_eig(&m);
    let (lambda2, lambda1) = (eig.values[0], eig.values[eig.values.len() - 1]);
    Ok(CounterexampleReport {
        q: plant.q().clone(),
        care,
        lambda1,
        lambda2,
        indefinite: lambda1 > 0.0 && lambda2 < 0.0,
    })
}

impl fmt::Display for CounterexampleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.care.p;
        writeln!(
            f,
            "P_c = [[{:.12}, {:.12}], [{:.12}, {:.12}]]",
            p[(0, 0)],
            p[(0, 1)],
            p[(1, 0)],
            p[(1, 1)]
        )?;
        writeln!(f, "CARE residual = {:.3e}", self.care.residual_norm)?;
        writeln!(f, "lambda_1 = {:.12}", self.lambda1)?;
        writeln!(f, "lambda_2 = {:.12}", self.lambda2)?;
        write!(
            f,
            "verdict: {}",
            if self.indefinite {
                "indefinite (lambda_1 > 0 > lambda_2)"
            } else {
                "definite"
            }
        )
    }
}

#[derive(Debug, Clone)]
pub struct PhRealization {
    pub care: CareSolution,
    /// `M = (A − BBᵀP_c − BC)P_c⁻¹`.
    pub m: DMatrix<f64>,
    pub j_hat: DMatrix<f64>,
    pub r_hat: DMatrix<f64>,
    pub min_eig_r_hat: f64,
    pub psd: bool,
}

/// Port-Hamiltonian form `(Ĵ − R̂)P_c` of the LTI passive controller.
pub fn ph_realizability_lti(plant: &LtiPhPlant) -> Result<PhRealization> {
    let (a, b, c) = (plant.a(), plant.b(), plant.c());
    let care = solve_care(a, b, c)?;
    let a_hat = a - b * b.transpose() * &care.p - b * c;
    let m = &a_hat * inverse(&care.p)?;
    let j_hat = skew_part(&m);
    let r_hat = -sym_part(&m);
    let min_eig_r_hat = sym_eig(&r_hat).values[0];
    Ok(PhRealization {
        care,
        m,
        j_hat,
        r_hat,
        min_eig_r_hat,
        psd: min_eig_r_hat >= -1e-10,
    })
}

// ---------------------------------------------------------------------------
// Trajectory audits

/// Per-step storage increase `max(H_{i+1} − H_i, 0)`; passes when every
/// increase is within `tol`.
pub fn storage_monotonicity(traj: &Trajectory, tol: f64) -> AuditReport {
    let t = traj.grid.points();
    let points = t[1..].iter().map(|ti| vec![*ti]).collect();
    let residuals = traj
        .storage
        .windows(2)
        .map(|w| {
            let inc = w[1] - w[0];
            if inc.is_nan() {
                f64::NAN
            } else {
                inc.max(0.0)
            }
        })
        .collect();
    AuditReport::new("storage monotonicity", points, residuals, tol)
}

/// Relative discrete power-balance residual per step.
pub fn power_balance(traj: &Trajectory, tol: f64) -> AuditReport {
    let t = traj.grid.points();
    let points = t[1..].iter().map(|ti| vec![*ti]).collect();
    AuditReport::new("discrete power balance", points, traj.power_residual.clone(), tol)
}

/// Relative L² distance between `V` and its best quadratic fit on `grid`.
pub fn quadratic_fit_residual(value: &ValueFunctionApprox, grid: &[[f64; 2]]) -> Result<f64> {
    let rows = grid.len();
    let mut design = DMatrix::zeros(rows, 6);
    let mut target = DVector::zeros(rows);
    for (k, z) in grid.iter().enumerate() {
        let (x, y) = (z[0], z[1]);
        for (col, val) in [1.0, x, y, x * x, x * y, y * y].into_iter().enumerate() {
            design[(k, col)] = val;
        }
        target[k] = value.value(z);
    }
    let norm = target.norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let fit = design
        .clone()
        .svd(true, true)
        .solve(&target, 1e-14)
        .map_err(|e| Error::Unsupported(format!("least squares failed: {e}")))?;
    Ok((design * fit - target).norm() / norm)
}

/// Storage samples of any function along stored states.
pub fn storage_along(storage: &dyn StorageFunction, states: &[DVector<f64>]) -> Vec<f64> {
    states.iter().map(|z| storage.value(z)).collect()
}
