//! Control-affine plants `ż = f(z) + B(z)u, y = h(z)` and the shipped examples.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use nalgebra::{dmatrix, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::galerkin::Rectangle;
use crate::linalg::{min_sym_eigenvalue, sym_part};

/// Scalar energy `H` with gradient `η = ∇H` and Hessian `Dη`.
pub trait StorageFunction: Send + Sync {
    fn value(&self, z: &DVector<f64>) -> f64;
    fn gradient(&self, z: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, z: &DVector<f64>) -> DMatrix<f64>;
}

/// A control-affine plant.
///
/// Jacobians default to central finite differences; shipped plants override
/// them analytically.
pub trait Plant: Send + Sync + fmt::Debug {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn drift(&self, z: &DVector<f64>) -> DVector<f64>;
    fn input_matrix(&self, z: &DVector<f64>) -> DMatrix<f64>;
    fn output(&self, z: &DVector<f64>) -> DVector<f64>;

    fn drift_jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        fd_jacobian(|x| self.drift(x), z)
    }

    fn output_jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        fd_jacobian(|x| self.output(x), z)
    }

    /// Whether `B(z)` is state independent.
    fn constant_input_matrix(&self) -> bool {
        false
    }

    fn storage(&self) -> Option<&dyn StorageFunction> {
        None
    }

    /// Constant `(J, R)` with `f(z) = (J − R)∇H(z)`, when the plant has one.
    fn ph_structure(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        None
    }
}

/// Central finite-difference Jacobian with step `1e-6·(1+|zᵢ|)`.
pub fn fd_jacobian<F>(map: F, z: &DVector<f64>) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let f0 = map(z);
    let mut jac = DMatrix::zeros(f0.len(), z.len());
    let mut x = z.clone();
    for j in 0..z.len() {
        let h = 1e-6 * (1.0 + z[j].abs());
        x[j] = z[j] + h;
        let fp = map(&x);
        x[j] = z[j] - h;
        let fm = map(&x);
        x[j] = z[j];
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    jac
}

fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

/// `f(z) + B(z)u`.
pub fn eval_dynamics(plant: &dyn Plant, z: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim("state", plant.state_dim(), z.len())?;
    check_dim("input", plant.input_dim(), u.len())?;
    Ok(plant.drift(z) + plant.input_matrix(z) * u)
}

/// `(H(z), η(z))` for plants with a known storage function.
pub fn eval_storage(plant: &dyn Plant, z: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    check_dim("state", plant.state_dim(), z.len())?;
    let storage = plant
        .storage()
        .ok_or_else(|| Error::Unsupported("plant has no storage function".into()))?;
    Ok((storage.value(z), storage.gradient(z)))
}

/// Linearization at the origin.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

pub fn linearize(plant: &dyn Plant) -> Linearization {
    let zero = DVector::zeros(plant.state_dim());
    Linearization {
        a: plant.drift_jacobian(&zero),
        b: plant.input_matrix(&zero),
        c: plant.output_jacobian(&zero),
    }
}

// ---------------------------------------------------------------------------
// Pendulum

/// `θ̈ = −g sin θ − λθ̇ + u` with collocated output `y = θ̇`.
#[derive(Debug, Clone)]
pub struct Pendulum {
    pub gravity: f64,
    pub friction: f64,
    energy: PendulumEnergy,
}

#[derive(Debug, Clone)]
pub struct PendulumEnergy {
    pub gravity: f64,
}

impl StorageFunction for PendulumEnergy {
    fn value(&self, z: &DVector<f64>) -> f64 {
        self.gravity * (1.0 - z[0].cos()) + 0.5 * z[1] * z[1]
    }
    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![self.gravity * z[0].sin(), z[1]])
    }
    fn hessian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        dmatrix![self.gravity * z[0].cos(), 0.0; 0.0, 1.0]
    }
}

impl Pendulum {
    pub fn new(gravity: f64, friction: f64) -> Self {
        Pendulum {
            gravity,
            friction,
            energy: PendulumEnergy { gravity },
        }
    }
}

impl Plant for Pendulum {
    fn state_dim(&self) -> usize {
        2
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn drift(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![z[1], -self.gravity * z[0].sin() - self.friction * z[1]])
    }
    fn input_matrix(&self, _z: &DVector<f64>) -> DMatrix<f64> {
        dmatrix![0.0; 1.0]
    }
    fn output(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![z[1]])
    }
    fn drift_jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        dmatrix![0.0, 1.0; -self.gravity * z[0].cos(), -self.friction]
    }
    fn output_jacobian(&self, _z: &DVector<f64>) -> DMatrix<f64> {
        dmatrix![0.0, 1.0]
    }
    fn constant_input_matrix(&self) -> bool {
        true
    }
    fn storage(&self) -> Option<&dyn StorageFunction> {
        Some(&self.energy)
    }
    fn ph_structure(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        Some((
            dmatrix![0.0, 1.0; -1.0, 0.0],
            dmatrix![0.0, 0.0; 0.0, self.friction],
        ))
    }
}

// ---------------------------------------------------------------------------
// Van der Pol

/// `ẍ = μ(1 − x²)ẋ − λẋ − x + u`, measured position `y = x`. No storage function.
#[derive(Debug, Clone)]
pub struct VanDerPol {
    pub mu: f64,
    pub damping: f64,
}

impl Plant for VanDerPol {
    fn state_dim(&self) -> usize {
        2
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn drift(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![
            z[1],
            self.mu * (1.0 - z[0] * z[0]) * z[1] - self.damping * z[1] - z[0],
        ])
    }
    fn input_matrix(&self, _z: &DVector<f64>) -> DMatrix<f64> {
        dmatrix![0.0; 1.0]
    }
    fn output(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![z[0]])
    }
    fn drift_jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        dmatrix![
            0.0, 1.0;
            -2.0 * self.mu * z[0] * z[1] - 1.0, self.mu * (1.0 - z[0] * z[0]) - self.damping
        ]
    }
    fn output_jacobian(&self, _z: &DVector<f64>) -> DMatrix<f64> {
        dmatrix![1.0, 0.0]
    }
    fn constant_input_matrix(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// LTI port-Hamiltonian

/// `ż = (J − R)Qz + Bu`, `y = BᵀQz`, `H(z) = ½zᵀQz`.
#[derive(Debug, Clone)]
pub struct LtiPhPlant {
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    energy: QuadraticEnergy,
    b: DMatrix<f64>,
    a: DMatrix<f64>,
    c: DMatrix<f64>,
}

/// `H(z) = ½zᵀQz` for symmetric `Q`.
#[derive(Debug, Clone)]
pub struct QuadraticEnergy {
    pub q: DMatrix<f64>,
}

impl StorageFunction for QuadraticEnergy {
    fn value(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.q * z))
    }
    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.q * z
    }
    fn hessian(&self, _z: &DVector<f64>) -> DMatrix<f64> {
        self.q.clone()
    }
}

impl LtiPhPlant {
    pub fn new(j: DMatrix<f64>, r: DMatrix<f64>, q: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = j.nrows();
        for (name, m) in [("J", &j), ("R", &r), ("Q", &q)] {
            if m.shape() != (n, n) {
                return Err(Error::Config(format!(
                    "{name} must be {n}×{n}, got {}×{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::Config(format!(
                "B must be {n}×m with m ≥ 1, got {}×{}",
                b.nrows(),
                b.ncols()
            )));
        }
        let scale = 1.0 + j.norm() + r.norm() + q.norm();
        if (&j + j.transpose()).norm() > 1e-14 * scale {
            return Err(Error::Config("J must be skew-symmetric".into()));
        }
        if (&r - r.transpose()).norm() > 1e-14 * scale || (&q - q.transpose()).norm() > 1e-14 * scale {
            return Err(Error::Config("R and Q must be symmetric".into()));
        }
        if min_sym_eigenvalue(&r) < -1e-12 {
            return Err(Error::Config("R must be positive semidefinite".into()));
        }
        if !(min_sym_eigenvalue(&q) > 0.0) {
            return Err(Error::Config("Q must be positive definite".into()));
        }
        let q = sym_part(&q);
        let a = (&j - &r) * &q;
        let c = b.transpose() * &q;
        Ok(LtiPhPlant {
            j,
            r,
            energy: QuadraticEnergy { q },
            b,
            a,
            c,
        })
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }
    pub fn q(&self) -> &DMatrix<f64> {
        &self.energy.q
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    /// `A = (J − R)Q`.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    /// `C = BᵀQ`.
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
}

impl Plant for LtiPhPlant {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    fn input_dim(&self) -> usize {
        self.b.ncols()
    }
    fn drift(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.a * z
    }
    fn input_matrix(&self, _z: &DVector<f64>) -> DMatrix<f64> {
        self.b.clone()
    }
    fn output(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.c * z
    }
    fn drift_jacobian(&self, _z: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }
    fn output_jacobian(&self, _z: &DVector<f64>) -> DMatrix<f64> {
        self.c.clone()
    }
    fn constant_input_matrix(&self) -> bool {
        true
    }
    fn storage(&self) -> Option<&dyn StorageFunction> {
        Some(&self.energy)
    }
    fn ph_structure(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        Some((self.j.clone(), self.r.clone()))
    }
}

/// The 2×2 pH system whose `Aᵀ(P_c+Q) + (P_c+Q)A` is indefinite.
pub fn counterexample_plant() -> LtiPhPlant {
    LtiPhPlant::new(
        dmatrix![0.0, -1.0; 1.0, 0.0],
        dmatrix![1.0, 0.0; 0.0, 0.0],
        DMatrix::identity(2, 2),
        dmatrix![1.0; -1.0],
    )
    .expect("built-in counterexample data is a valid pH system")
}

// ---------------------------------------------------------------------------
// Presets

/// Named, frozen experiment plants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Pendulum,
    VanDerPol,
    Counterexample,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Pendulum, Preset::VanDerPol, Preset::Counterexample];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Pendulum => "pendulum-paper",
            Preset::VanDerPol => "vdp-paper",
            Preset::Counterexample => "ph-counterexample",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == name).ok_or_else(|| {
            Error::Config(format!(
                "unknown preset '{name}' (expected one of: {})",
                Preset::ALL.map(|p| p.name()).join(", ")
            ))
        })
    }

    pub fn plant(self) -> Box<dyn Plant> {
        match self {
            Preset::Pendulum => Box::new(Pendulum::new(9.81, 0.2)),
            Preset::VanDerPol => Box::new(VanDerPol {
                mu: 2.0,
                damping: 1.6,
            }),
            Preset::Counterexample => Box::new(counterexample_plant()),
        }
    }

    pub fn initial_state(self) -> DVector<f64> {
        match self {
            Preset::Pendulum => DVector::from_vec(vec![FRAC_PI_4, -1.0]),
            Preset::VanDerPol => DVector::from_vec(vec![1.0, -0.5]),
            Preset::Counterexample => DVector::from_vec(vec![1.0, 0.0]),
        }
    }

    /// Square Galerkin domain `[−w, w]²`: `w = 2.5` for the pendulum and the
    /// LTI plant, `w = 1.2` for Van der Pol.
    pub fn domain(self) -> Rectangle {
        let w = match self {
            Preset::Pendulum | Preset::Counterexample => 2.5,
            Preset::VanDerPol => 1.2,
        };
        Rectangle {
            x_lo: -w,
            x_hi: w,
            y_lo: -w,
            y_hi: w,
        }
    }

    /// Per-axis Legendre degree used by the reference experiments.
    pub fn degree(self) -> usize {
        match self {
            Preset::Pendulum => 10,
            Preset::VanDerPol => 15,
            Preset::Counterexample => 5,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    #[test]
    fn pendulum_dynamics_examples() {
        let p = Preset::Pendulum.plant();
        let d = eval_dynamics(p.as_ref(), &v(&[0.0, 0.0]), &v(&[0.0])).unwrap();
        assert_eq!(d.as_slice(), &[0.0, 0.0]);
        let d = eval_dynamics(p.as_ref(), &v(&[FRAC_PI_2, 0.0]), &v(&[0.0])).unwrap();
        assert_eq!(d[0], 0.0);
        assert!((d[1] + 9.81).abs() < 1e-15);
    }

    #[test]
    fn van_der_pol_dynamics_example() {
        let p = Preset::VanDerPol.plant();
        let d = eval_dynamics(p.as_ref(), &v(&[1.0, -0.5]), &v(&[0.0])).unwrap();
        assert!((d[0] + 0.5).abs() < 1e-15);
        assert!((d[1] + 0.2).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let p = Preset::Pendulum.plant();
        let err = eval_dynamics(p.as_ref(), &v(&[0.0]), &v(&[0.0])).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn storage_examples() {
        let p = Preset::Pendulum.plant();
        let (h, eta) = eval_storage(p.as_ref(), &v(&[0.0, 0.0])).unwrap();
        assert_eq!(h, 0.0);
        assert_eq!(eta.as_slice(), &[0.0, 0.0]);
        let (h, eta) = eval_storage(p.as_ref(), &v(&[PI, 0.0])).unwrap();
        assert!((h - 19.62).abs() < 1e-12);
        assert!(eta.norm() < 1e-14);

        let lti = LtiPhPlant::new(
            dmatrix![0.0, 1.0; -1.0, 0.0],
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            dmatrix![1.0; 0.0],
        )
        .unwrap();
        let (h, eta) = eval_storage(&lti, &v(&[1.0, 1.0])).unwrap();
        assert_eq!(h, 1.0);
        assert_eq!(eta.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn van_der_pol_has_no_storage() {
        let p = Preset::VanDerPol.plant();
        let err = eval_storage(p.as_ref(), &v(&[0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn linearizations() {
        let lin = linearize(Preset::Pendulum.plant().as_ref());
        assert_eq!(lin.a, dmatrix![0.0, 1.0; -9.81, -0.2]);
        assert_eq!(lin.b, dmatrix![0.0; 1.0]);
        assert_eq!(lin.c, dmatrix![0.0, 1.0]);

        let lin = linearize(Preset::VanDerPol.plant().as_ref());
        assert!((lin.a.clone() - dmatrix![0.0, 1.0; -1.0, 0.4]).norm() < 1e-15);
        assert_eq!(lin.c, dmatrix![1.0, 0.0]);

        let lti = counterexample_plant();
        let lin = linearize(&lti);
        assert_eq!(&lin.a, lti.a());
        assert_eq!(lin.a, (lti.j() - lti.r()) * lti.q());
    }

    #[test]
    fn lti_validation() {
        let bad_j = LtiPhPlant::new(
            dmatrix![0.0, 1.0; 1.0, 0.0],
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            dmatrix![1.0; 0.0],
        );
        assert!(bad_j.is_err());
        let bad_r = LtiPhPlant::new(
            DMatrix::zeros(2, 2),
            dmatrix![-1.0, 0.0; 0.0, 0.0],
            DMatrix::identity(2, 2),
            dmatrix![1.0; 0.0],
        );
        assert!(bad_r.is_err());
        let bad_q = LtiPhPlant::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
            dmatrix![1.0, 0.0; 0.0, 0.0],
            dmatrix![1.0; 0.0],
        );
        assert!(bad_q.is_err());
    }

    #[test]
    fn lti_collocated_output() {
        let lti = counterexample_plant();
        let z = v(&[0.3, -1.7]);
        let by = lti.b().transpose() * lti.storage().unwrap().gradient(&z);
        assert_eq!(by, lti.output(&z));
    }

    #[test]
    fn preset_lookup() {
        assert_eq!(Preset::from_name("vdp-paper").unwrap(), Preset::VanDerPol);
        assert!(Preset::from_name("nope").unwrap_err().is_config());
    }
}
