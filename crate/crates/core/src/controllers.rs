//! Output-feedback controllers built from an approximate value function `V`,
//! `η_c = ∇V`, and their power-conserving coupling to a plant.
//!
//! The passive controller is a copy of the plant with storage `V`:
//! `ẑ̇ = f(ẑ) − BBᵀη_c(ẑ) + B(û − h(ẑ))`, `ŷ = Bᵀη_c(ẑ)`.
//! The EKF variant replaces the injection gain `B` by a Kalman gain
//! `K = ΠHᵀR⁻¹` driven by a Riccati flow for `Π`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::galerkin::{Rectangle, ValueFunctionApprox};
use crate::integrators::{eval_r, OdeSystem, PortSystem};
use crate::linalg::{inverse, min_sym_eigenvalue};
use crate::models::{fd_jacobian, Plant, StorageFunction};

fn grad_at(value: &ValueFunctionApprox, z: &DVector<f64>) -> DVector<f64> {
    DVector::from_column_slice(value.gradient(&[z[0], z[1]]).as_slice())
}

/// `u*(z) = −B(z)ᵀ∇V(z)`.
pub fn optimal_feedback(value: &ValueFunctionApprox, plant: &dyn Plant, z: &[f64; 2]) -> DVector<f64> {
    let zv = DVector::from_column_slice(z);
    let g = value.gradient(z);
    -(plant.input_matrix(&zv).transpose() * DVector::from_column_slice(g.as_slice()))
}

/// `D(f − BBᵀη_c)(z)`, analytic when `B` is constant.
fn feedback_drift_jacobian(plant: &dyn Plant, value: &ValueFunctionApprox, z: &DVector<f64>) -> DMatrix<f64> {
    if plant.constant_input_matrix() {
        let b = plant.input_matrix(z);
        let hess = value.hessian(z);
        plant.drift_jacobian(z) - &b * b.transpose() * hess
    } else {
        fd_jacobian(
            |x| {
                let b = plant.input_matrix(x);
                plant.drift(x) - &b * (b.transpose() * grad_at(value, x))
            },
            z,
        )
    }
}

// ---------------------------------------------------------------------------
// Passive controller

#[derive(Debug, Clone, Copy)]
pub struct PassiveController<'a> {
    pub plant: &'a dyn Plant,
    pub value: &'a ValueFunctionApprox,
}

impl<'a> PassiveController<'a> {
    pub fn new(plant: &'a dyn Plant, value: &'a ValueFunctionApprox) -> Result<Self> {
        if plant.state_dim() != 2 {
            return Err(Error::DimensionMismatch {
                what: "plant state for a two-dimensional value function",
                expected: 2,
                got: plant.state_dim(),
            });
        }
        Ok(PassiveController { plant, value })
    }

    pub fn output(&self, zh: &DVector<f64>) -> DVector<f64> {
        self.plant.input_matrix(zh).transpose() * grad_at(self.value, zh)
    }

    /// `f̂ = f − BBᵀη_c − Bh`.
    pub fn modified_drift(&self, zh: &DVector<f64>) -> DVector<f64> {
        let b = self.plant.input_matrix(zh);
        let eta = grad_at(self.value, zh);
        self.plant.drift(zh) - &b * (b.transpose() * eta + self.plant.output(zh))
    }

    /// `ℓ̂ = (h + Bᵀη_c)/√2`.
    pub fn certificate(&self, zh: &DVector<f64>) -> DVector<f64> {
        (self.plant.output(zh) + self.output(zh)) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// `(ẑ̇, ŷ)` for controller state `ẑ` and controller input `û`.
    pub fn rhs(&self, zh: &DVector<f64>, u_hat: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let b = self.plant.input_matrix(zh);
        let eta = grad_at(self.value, zh);
        let y_hat = b.transpose() * eta;
        let dz = self.plant.drift(zh) - &b * &y_hat + &b * (u_hat - self.plant.output(zh));
        (dz, y_hat)
    }

    /// The controller as `ẑ̇ = −r(η_c) + Bû` with `r = −f̂ ∘ η_c⁻¹`, the gradient
    /// inversion confined to `trust_factor` times the Galerkin domain.
    pub fn port(&self, trust_factor: f64) -> ControllerPort<'a> {
        ControllerPort {
            ctrl: *self,
            trust: self.value.basis.domain.scaled(trust_factor),
        }
    }
}

/// Trust-region factor for gradient inversion.
pub const TRUST_FACTOR: f64 = 1.5;

pub struct ControllerPort<'a> {
    ctrl: PassiveController<'a>,
    trust: Rectangle,
}

impl PortSystem for ControllerPort<'_> {
    fn state_dim(&self) -> usize {
        2
    }
    fn input_dim(&self) -> usize {
        self.ctrl.plant.input_dim()
    }
    fn storage(&self) -> &dyn StorageFunction {
        self.ctrl.value
    }
    fn input_matrix(&self, z: &DVector<f64>) -> DMatrix<f64> {
        self.ctrl.plant.input_matrix(z)
    }
    fn resistive(&self, v: &DVector<f64>, hint: &DVector<f64>) -> Result<DVector<f64>> {
        let (r, _) = eval_r(
            self.ctrl.value,
            |z| self.ctrl.modified_drift(z),
            v,
            hint,
            Some(&self.trust),
        )?;
        Ok(r)
    }
}

// ---------------------------------------------------------------------------
// EKF controller

#[derive(Debug, Clone)]
pub struct EkfController<'a> {
    pub plant: &'a dyn Plant,
    pub value: &'a ValueFunctionApprox,
    pub process_weight: DMatrix<f64>,
    measurement_weight_inv: DMatrix<f64>,
}

/// Time derivative of the EKF state and its output.
#[derive(Debug, Clone)]
pub struct EkfRhs {
    pub state_rate: DVector<f64>,
    pub covariance_rate: DMatrix<f64>,
    pub output: DVector<f64>,
}

impl<'a> EkfController<'a> {
    /// Identity weights `Q = I`, `R = I`.
    pub fn new(plant: &'a dyn Plant, value: &'a ValueFunctionApprox) -> Result<Self> {
        let (n, p) = (
            plant.state_dim(),
            plant.output(&DVector::zeros(plant.state_dim())).len(),
        );
        Self::with_weights(plant, value, DMatrix::identity(n, n), DMatrix::identity(p, p))
    }

    pub fn with_weights(
        plant: &'a dyn Plant,
        value: &'a ValueFunctionApprox,
        process_weight: DMatrix<f64>,
        measurement_weight: DMatrix<f64>,
    ) -> Result<Self> {
        PassiveController::new(plant, value)?;
        let n = plant.state_dim();
        if process_weight.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                what: "process weight rows",
                expected: n,
                got: process_weight.nrows(),
            });
        }
        if min_sym_eigenvalue(&measurement_weight) <= 0.0 {
            return Err(Error::Config(
                "measurement weight must be positive definite".into(),
            ));
        }
        Ok(EkfController {
            plant,
            value,
            process_weight,
            measurement_weight_inv: inverse(&measurement_weight)?,
        })
    }

    /// Checked right-hand side; `Π` must be symmetric positive semidefinite.
    pub fn rhs(&self, zb: &DVector<f64>, pi: &DMatrix<f64>, u_bar: &DVector<f64>) -> Result<EkfRhs> {
        let scale = 1.0 + pi.norm();
        if (pi - pi.transpose()).norm() > 1e-10 * scale {
            return Err(Error::Covariance("covariance is not symmetric".into()));
        }
        let min_eig = min_sym_eigenvalue(pi);
        if min_eig < -1e-8 {
            return Err(Error::Covariance(format!(
                "covariance is not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(self.rhs_unchecked(zb, pi, u_bar))
    }

    fn rhs_unchecked(&self, zb: &DVector<f64>, pi: &DMatrix<f64>, u_bar: &DVector<f64>) -> EkfRhs {
        let b = self.plant.input_matrix(zb);
        let eta = grad_at(self.value, zb);
        let output = b.transpose() * eta;
        let h_jac = self.plant.output_jacobian(zb);
        let pht_rinv = pi * h_jac.transpose() * &self.measurement_weight_inv;
        let innovation = u_bar - self.plant.output(zb);
        let state_rate = self.plant.drift(zb) - &b * &output + &pht_rinv * innovation;
        let f = feedback_drift_jacobian(self.plant, self.value, zb);
        let covariance_rate = &f * pi + pi * f.transpose() - &pht_rinv * &h_jac * pi + &self.process_weight;
        EkfRhs {
            state_rate,
            covariance_rate,
            output,
        }
    }
}

// ---------------------------------------------------------------------------
// Closed loop

#[derive(Debug, Clone)]
pub enum Controller<'a> {
    /// `u ≡ 0`.
    None,
    Passive(PassiveController<'a>),
    Ekf(EkfController<'a>),
}

impl Controller<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            Controller::None => "uncontrolled",
            Controller::Passive(_) => "passive",
            Controller::Ekf(_) => "ekf",
        }
    }
}

/// Plant and controller under `û = y`, `u = −ŷ`. The stacked state is
/// `z`, then `ẑ` (passive) or `z̄` followed by `Π` column by column (EKF).
#[derive(Debug, Clone)]
pub struct ClosedLoop<'a> {
    pub plant: &'a dyn Plant,
    pub controller: Controller<'a>,
}

/// Signals exchanged at the interconnection.
#[derive(Debug, Clone)]
pub struct PortSignals {
    pub plant_input: DVector<f64>,
    pub plant_output: DVector<f64>,
    pub controller_input: DVector<f64>,
    pub controller_output: DVector<f64>,
}

impl<'a> ClosedLoop<'a> {
    pub fn new(plant: &'a dyn Plant, controller: Controller<'a>) -> Self {
        ClosedLoop { plant, controller }
    }

    fn n(&self) -> usize {
        self.plant.state_dim()
    }

    /// Stacked initial state with `ẑ₀ = 0`, `z̄₀ = 0`, `Π₀ = I`.
    pub fn initial_state(&self, z0: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let mut x = DVector::zeros(self.dim());
        x.rows_mut(0, n).copy_from(z0);
        if let Controller::Ekf(_) = self.controller {
            let eye = DMatrix::<f64>::identity(n, n);
            x.rows_mut(2 * n, n * n).copy_from_slice(eye.as_slice());
        }
        x
    }

    pub fn plant_state(&self, x: &DVector<f64>) -> DVector<f64> {
        x.rows(0, self.n()).into_owned()
    }

    /// `ẑ` or `z̄`; `None` without a controller.
    pub fn controller_state(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        match self.controller {
            Controller::None => None,
            _ => Some(x.rows(self.n(), self.n()).into_owned()),
        }
    }

    pub fn covariance(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        match self.controller {
            Controller::Ekf(_) => {
                let n = self.n();
                Some(DMatrix::from_column_slice(n, n, x.rows(2 * n, n * n).as_slice()))
            }
            _ => None,
        }
    }

    pub fn signals(&self, x: &DVector<f64>) -> PortSignals {
        let z = self.plant_state(x);
        let y = self.plant.output(&z);
        let y_hat = match &self.controller {
            Controller::None => DVector::zeros(self.plant.input_dim()),
            Controller::Passive(c) => c.output(&x.rows(self.n(), self.n()).into_owned()),
            Controller::Ekf(c) => {
                let zb = x.rows(self.n(), self.n()).into_owned();
                c.plant.input_matrix(&zb).transpose() * grad_at(c.value, &zb)
            }
        };
        PortSignals {
            plant_input: -&y_hat,
            plant_output: y.clone(),
            controller_input: y,
            controller_output: y_hat,
        }
    }

    /// Stacked vector field.
    pub fn rhs(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let z = self.plant_state(x);
        let y = self.plant.output(&z);
        let mut out = DVector::zeros(x.len());
        let u = match &self.controller {
            Controller::None => DVector::zeros(self.plant.input_dim()),
            Controller::Passive(c) => {
                let (dzh, y_hat) = c.rhs(&x.rows(n, n).into_owned(), &y);
                out.rows_mut(n, n).copy_from(&dzh);
                -y_hat
            }
            Controller::Ekf(c) => {
                let zb = x.rows(n, n).into_owned();
                let pi = DMatrix::from_column_slice(n, n, x.rows(2 * n, n * n).as_slice());
                // Newton probes may break symmetry; the flow only sees sym(Π).
                let pi = (&pi + pi.transpose()) * 0.5;
                let rates = c.rhs_unchecked(&zb, &pi, &y);
                out.rows_mut(n, n).copy_from(&rates.state_rate);
                out.rows_mut(2 * n, n * n)
                    .copy_from_slice(rates.covariance_rate.as_slice());
                -rates.output
            }
        };
        let dz = self.plant.drift(&z) + self.plant.input_matrix(&z) * u;
        out.rows_mut(0, n).copy_from(&dz);
        out
    }
}

impl OdeSystem for ClosedLoop<'_> {
    fn dim(&self) -> usize {
        let n = self.n();
        match self.controller {
            Controller::None => n,
            Controller::Passive(_) => 2 * n,
            Controller::Ekf(_) => 2 * n + n * n,
        }
    }
    fn input_dim(&self) -> usize {
        0
    }
    fn rhs(&self, _t: f64, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        ClosedLoop::rhs(self, x)
    }
    fn observe(&self, x: &DVector<f64>, _u: &DVector<f64>) -> (DVector<f64>, DVector<f64>, f64) {
        let s = self.signals(x);
        let z = self.plant_state(x);
        let h = self.plant.storage().map_or(f64::NAN, |e| e.value(&z));
        (s.plant_input, s.plant_output, h)
    }
}
