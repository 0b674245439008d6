//! Seeded generators and structural checks shared by the integration tests.
#![allow(dead_code)]

use std::sync::OnceLock;

use nalgebra::{Complex, DMatrix};
use phcontrol::galerkin::ValueFunctionApprox;
use phcontrol::hjb::{policy_iteration, PolicyIterConfig, PolicyIterReport};
use phcontrol::models::{LtiPhPlant, Preset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// PBH test: `rank [A − λI, B] = n` for every eigenvalue with `Re λ ≥ −margin`.
pub fn pbh_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>, margin: f64) -> bool {
    pbh_min_singular_value(a, b, margin) > 1e-8 * (1.0 + a.norm() + b.norm())
}

/// Smallest singular value of `[A − λI, B]` over the eigenvalues with `Re λ ≥ −margin`.
pub fn pbh_min_singular_value(a: &DMatrix<f64>, b: &DMatrix<f64>, margin: f64) -> f64 {
    let n = a.nrows();
    a.complex_eigenvalues()
        .iter()
        .filter(|l| l.re >= -margin)
        .map(|l| {
            let mut m = DMatrix::<Complex<f64>>::zeros(n, n + b.ncols());
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = Complex::new(a[(i, j)], 0.0);
                }
                m[(i, i)] -= l;
                for j in 0..b.ncols() {
                    m[(i, n + j)] = Complex::new(b[(i, j)], 0.0);
                }
            }
            m.svd(false, false).singular_values.min()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn pbh_detectable(a: &DMatrix<f64>, c: &DMatrix<f64>, margin: f64) -> bool {
    pbh_stabilizable(&a.transpose(), &c.transpose(), margin)
}

/// Dense system `(A, B, C)` with entries uniform in `[−1, 1]`, `n ≤ 8`,
/// stabilizable and detectable.
pub fn random_care_system(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    loop {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=n);
        let p = rng.random_range(1..=n);
        let a = uniform_matrix(rng, n, n);
        let b = uniform_matrix(rng, n, m);
        let c = uniform_matrix(rng, p, n);
        if pbh_stabilizable(&a, &b, 1e-8) && pbh_detectable(&a, &c, 1e-8) {
            return (a, b, c);
        }
    }
}

/// LTI pH plant of dimension `n` with random `J`, PSD `R` of random rank,
/// `Q ≻ 0` and `B`, controllable and observable so that the Riccati solution
/// is positive definite.
pub fn random_ph_plant(rng: &mut ChaCha8Rng, n: usize) -> LtiPhPlant {
    loop {
        let g = uniform_matrix(rng, n, n);
        let j = &g - g.transpose();
        let rank = rng.random_range(0..=n);
        let f = uniform_matrix(rng, n, rank);
        let r = &f * f.transpose();
        let h = uniform_matrix(rng, n, n);
        let q = &h * h.transpose() + DMatrix::identity(n, n) * 0.2;
        let m = rng.random_range(1..=n);
        let b = uniform_matrix(rng, n, m);
        let Ok(plant) = LtiPhPlant::new(j, r, q, b) else {
            continue;
        };
        let everywhere = f64::INFINITY;
        if pbh_stabilizable(plant.a(), plant.b(), everywhere)
            && pbh_detectable(plant.a(), plant.c(), everywhere)
        {
            return plant;
        }
    }
}

/// Policy iteration for a preset at its default degree and domain, solved once per test binary.
pub fn solved(preset: Preset) -> &'static PolicyIterReport {
    static PENDULUM: OnceLock<PolicyIterReport> = OnceLock::new();
    static VDP: OnceLock<PolicyIterReport> = OnceLock::new();
    static LTI: OnceLock<PolicyIterReport> = OnceLock::new();
    let cell = match preset {
        Preset::Pendulum => &PENDULUM,
        Preset::VanDerPol => &VDP,
        Preset::Counterexample => &LTI,
    };
    cell.get_or_init(|| {
        let cfg = PolicyIterConfig::new(preset.degree(), preset.domain());
        policy_iteration(preset.plant().as_ref(), &cfg).expect("policy iteration")
    })
}

pub fn value_function(preset: Preset) -> &'static ValueFunctionApprox {
    &solved(preset).value_function
}
