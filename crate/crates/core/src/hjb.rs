//! Galerkin policy iteration for the infinite-horizon problem
//! `min ½∫ yᵀy + uᵀu dt` subject to a control-affine plant.
//!
//! Each policy evaluation solves the square Galerkin system
//! `Σ αₖ ∫ ∇ψₖᵀ(f + Bu)ψᵣ = −½ ∫ (hᵀh + uᵀu)ψᵣ` over all modes except the
//! constant one, whose gradient vanishes. The constant coefficient is then
//! fixed by `V(0) = 0`.

use nalgebra::{DMatrix, DVector};

use crate::controllers::optimal_feedback;
use crate::error::{Error, Result};
use crate::galerkin::{gauss_rule, LegendreBasis, QuadratureRule, Rectangle, ValueFunctionApprox};
use crate::linalg::{solve_care, solve_linear_vec, CareSolution};
use crate::models::{linearize, Plant};

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyIterConfig {
    pub degree: usize,
    pub domain: Rectangle,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iters: usize,
    pub test_grid_per_axis: usize,
    /// Gauss points per axis; `None` means `2(d+1)`.
    pub quad_per_axis: Option<usize>,
}

impl PolicyIterConfig {
    pub fn new(degree: usize, domain: Rectangle) -> Self {
        PolicyIterConfig {
            degree,
            domain,
            tol_abs: 1e-14,
            tol_rel: 1e-10,
            max_iters: 30,
            test_grid_per_axis: 100,
            quad_per_axis: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::Config("degree must be at least 1".into()));
        }
        if !(self.tol_abs > 0.0) || !(self.tol_rel > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_iters == 0 || self.test_grid_per_axis == 0 {
            return Err(Error::Config(
                "max_iters and test_grid_per_axis must be positive".into(),
            ));
        }
        if self.quad_per_axis == Some(0) {
            return Err(Error::Config("quadrature order must be positive".into()));
        }
        Ok(())
    }

    pub fn quad_order(&self) -> usize {
        self.quad_per_axis.unwrap_or(2 * (self.degree + 1))
    }
}

#[derive(Debug, Clone)]
pub struct PolicyIterReport {
    pub iterations: usize,
    pub delta_abs_history: Vec<f64>,
    pub delta_rel_history: Vec<f64>,
    /// RMS HJB residual of each iterate over the test grid.
    pub hjb_residual_history: Vec<f64>,
    pub final_hjb_residual: f64,
    pub value_function: ValueFunctionApprox,
    /// Riccati solution of the linearization that seeded the iteration.
    pub initial_care: CareSolution,
}

/// Plant data and basis tables at the quadrature nodes; independent of the policy.
struct Assembler<'a> {
    basis: LegendreBasis,
    quad: &'a QuadratureRule,
    /// `w_q ψ_k(z_q)`, nodes × trial modes (constant mode dropped).
    weighted_values: DMatrix<f64>,
    grad_x: DMatrix<f64>,
    grad_y: DMatrix<f64>,
    drift: Vec<DVector<f64>>,
    input: Vec<DMatrix<f64>>,
    output_sq: Vec<f64>,
}

impl<'a> Assembler<'a> {
    fn new(plant: &'a dyn Plant, basis: LegendreBasis, quad: &'a QuadratureRule) -> Result<Self> {
        if plant.state_dim() != 2 {
            return Err(Error::Unsupported(format!(
                "Galerkin policy iteration is two-dimensional, plant has n = {}",
                plant.state_dim()
            )));
        }
        let d = basis.degree;
        let k = d * d - 1;
        let nq = quad.nodes.len();
        let mut weighted_values = DMatrix::zeros(nq, k);
        let mut grad_x = DMatrix::zeros(nq, k);
        let mut grad_y = DMatrix::zeros(nq, k);
        let mut drift = Vec::with_capacity(nq);
        let mut input = Vec::with_capacity(nq);
        let mut output_sq = Vec::with_capacity(nq);
        for (q, (node, &w)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
            let t = basis.tables(node);
            for i in 0..d {
                for j in 0..d {
                    if i == 0 && j == 0 {
                        continue;
                    }
                    let col = i * d + j - 1;
                    weighted_values[(q, col)] = w * t.x.0[i] * t.y.0[j];
                    grad_x[(q, col)] = t.x.1[i] * t.y.0[j];
                    grad_y[(q, col)] = t.x.0[i] * t.y.1[j];
                }
            }
            let z = DVector::from_column_slice(node);
            drift.push(plant.drift(&z));
            input.push(plant.input_matrix(&z));
            output_sq.push(plant.output(&z).norm_squared());
        }
        Ok(Assembler {
            basis,
            quad,
            weighted_values,
            grad_x,
            grad_y,
            drift,
            input,
            output_sq,
        })
    }

    fn assemble<P>(&self, policy: P) -> (DMatrix<f64>, DVector<f64>)
    where
        P: Fn(&[f64; 2]) -> DVector<f64>,
    {
        let nq = self.quad.nodes.len();
        let mut fx = vec![0.0; nq];
        let mut fy = vec![0.0; nq];
        let mut source = DVector::zeros(nq);
        for q in 0..nq {
            let u = policy(&self.quad.nodes[q]);
            let field = &self.drift[q] + &self.input[q] * &u;
            fx[q] = field[0];
            fy[q] = field[1];
            source[q] = -0.5 * (self.output_sq[q] + u.norm_squared());
        }
        let transport = DMatrix::from_fn(nq, self.grad_x.ncols(), |q, c| {
            fx[q] * self.grad_x[(q, c)] + fy[q] * self.grad_y[(q, c)]
        });
        let m = self.weighted_values.transpose() * transport;
        let rhs = self.weighted_values.transpose() * source;
        (m, rhs)
    }

    fn solve(&self, m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<ValueFunctionApprox> {
        let coeffs = solve_linear_vec(m, rhs).map_err(|e| match e {
            Error::SingularMatrix { pivot } => Error::SingularGalerkinSystem(format!(
                "policy evaluation matrix has pivot {pivot:e}; the policy/domain pairing carries no information"
            )),
            other => other,
        })?;
        let mut v = ValueFunctionApprox::zeros(self.basis);
        let d = self.basis.degree;
        for (idx, c) in coeffs.iter().enumerate() {
            let mode = idx + 1;
            v.alpha[(mode / d, mode % d)] = *c;
        }
        v.normalize_at_origin();
        Ok(v)
    }
}

/// Galerkin matrix and right-hand side for one policy evaluation.
///
/// Rows are test modes and columns trial modes, both row-major in `(i, j)`
/// with the constant mode removed.
pub fn assemble_system<P>(
    plant: &dyn Plant,
    policy: P,
    basis: &LegendreBasis,
    quad: &QuadratureRule,
) -> Result<(DMatrix<f64>, DVector<f64>)>
where
    P: Fn(&[f64; 2]) -> DVector<f64>,
{
    let asm = Assembler::new(plant, *basis, quad)?;
    let (m, rhs) = asm.assemble(policy);
    if m.iter().all(|&x| x == 0.0) {
        return Err(Error::SingularGalerkinSystem(
            "Galerkin matrix vanishes identically".into(),
        ));
    }
    Ok((m, rhs))
}

/// Solves one policy evaluation and returns the normalized value function.
pub fn evaluate_policy<P>(
    plant: &dyn Plant,
    policy: P,
    basis: &LegendreBasis,
    quad: &QuadratureRule,
) -> Result<ValueFunctionApprox>
where
    P: Fn(&[f64; 2]) -> DVector<f64>,
{
    let asm = Assembler::new(plant, *basis, quad)?;
    let (m, rhs) = asm.assemble(policy);
    asm.solve(&m, &rhs)
}

/// Unknown vector of a value function in the layout used by [`assemble_system`].
pub fn trial_coefficients(v: &ValueFunctionApprox) -> DVector<f64> {
    let d = v.basis.degree;
    DVector::from_iterator(d * d - 1, (1..d * d).map(|mode| v.alpha[(mode / d, mode % d)]))
}

/// `(δ_abs, δ_rel)` between two policies sampled on the same grid.
pub fn stopping_metrics(u_new: &[DVector<f64>], u_old: &[DVector<f64>]) -> Result<(f64, f64)> {
    if u_new.is_empty() || u_new.len() != u_old.len() {
        return Err(Error::Config(
            "stopping metrics need two nonempty policy samples of equal length".into(),
        ));
    }
    let delta_abs = u_new
        .iter()
        .zip(u_old)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scale = u_old.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let delta_rel = if scale > 0.0 {
        delta_abs / scale
    } else {
        f64::INFINITY
    };
    Ok((delta_abs, delta_rel))
}

/// Left side of the HJB equation `η_cᵀf − ½η_cᵀBBᵀη_c + ½hᵀh` at `z`.
pub fn hjb_residual_at(plant: &dyn Plant, v: &ValueFunctionApprox, z: &[f64; 2]) -> f64 {
    let zv = DVector::from_column_slice(z);
    let grad = v.eval(z).gradient;
    let eta = DVector::from_column_slice(grad.as_slice());
    let bt_eta = plant.input_matrix(&zv).transpose() * &eta;
    eta.dot(&plant.drift(&zv)) - 0.5 * bt_eta.norm_squared() + 0.5 * plant.output(&zv).norm_squared()
}

fn rms_hjb_residual(plant: &dyn Plant, v: &ValueFunctionApprox, grid: &[[f64; 2]]) -> f64 {
    let sum: f64 = grid.iter().map(|z| hjb_residual_at(plant, v, z).powi(2)).sum();
    (sum / grid.len() as f64).sqrt()
}

/// Policy iteration seeded with the LQR feedback of the linearization at zero.
pub fn policy_iteration(plant: &dyn Plant, cfg: &PolicyIterConfig) -> Result<PolicyIterReport> {
    cfg.validate()?;
    let basis = LegendreBasis::new(cfg.degree, cfg.domain)?;
    let quad = gauss_rule(cfg.quad_order(), &cfg.domain)?;
    let asm = Assembler::new(plant, basis, &quad)?;

    let lin = linearize(plant);
    let care = solve_care(&lin.a, &lin.b, &lin.c)?;
    let gain = lin.b.transpose() * &care.p;
    let initial_policy = |z: &[f64; 2]| -(&gain * DVector::from_column_slice(z));

    let grid = cfg.domain.grid(cfg.test_grid_per_axis);
    let mut u_old: Vec<DVector<f64>> = grid.iter().map(initial_policy).collect();

    let mut delta_abs_history = Vec::new();
    let mut delta_rel_history = Vec::new();
    let mut hjb_residual_history = Vec::new();
    let mut current: Option<ValueFunctionApprox> = None;

    for iter in 1..=cfg.max_iters {
        let (m, rhs) = match &current {
            None => asm.assemble(initial_policy),
            Some(v) => asm.assemble(|z| optimal_feedback(v, plant, z)),
        };
        let v = asm.solve(&m, &rhs)?;
        let u_new: Vec<DVector<f64>> = grid.iter().map(|z| optimal_feedback(&v, plant, z)).collect();
        let (delta_abs, delta_rel) = stopping_metrics(&u_new, &u_old)?;
        delta_abs_history.push(delta_abs);
        delta_rel_history.push(delta_rel);
        hjb_residual_history.push(rms_hjb_residual(plant, &v, &grid));

        if delta_abs <= cfg.tol_abs || delta_rel <= cfg.tol_rel {
            let final_hjb_residual = *hjb_residual_history.last().expect("pushed above");
            return Ok(PolicyIterReport {
                iterations: iter,
                delta_abs_history,
                delta_rel_history,
                hjb_residual_history,
                final_hjb_residual,
                value_function: v,
                initial_care: care,
            });
        }
        u_old = u_new;
        current = Some(v);
    }

    Err(Error::NonConvergence {
        iterations: cfg.max_iters,
        last_delta_abs: *delta_abs_history.last().unwrap_or(&f64::NAN),
        last_delta_rel: *delta_rel_history.last().unwrap_or(&f64::NAN),
        delta_abs_history,
        delta_rel_history,
    })
}
