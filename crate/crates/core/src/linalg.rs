//! Dense linear algebra for small systems.
//!
//! Matrix storage and LU factorization come from `nalgebra`; the symmetric
//! eigensolver (cyclic Jacobi), the Kronecker-form Lyapunov solver and the
//! sign-function Riccati solver are implemented here.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `a * x = b` for a square `a` by partially pivoted LU.
pub fn solve_linear(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            what: "solve_linear: square coefficient matrix",
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "solve_linear: right-hand side rows",
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    let lu = a.clone().lu();
    check_pivots(&lu.u(), a.norm())?;
    lu.solve(b).ok_or(Error::SingularMatrix { pivot: 0.0 })
}

/// Vector right-hand side convenience wrapper around [`solve_linear`].
pub fn solve_linear_vec(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let rhs = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    let x = solve_linear(a, &rhs)?;
    Ok(x.column(0).into_owned())
}

/// Inverse of a square matrix, with the same singularity check as [`solve_linear`].
pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve_linear(a, &DMatrix::identity(a.nrows(), a.nrows()))
}

fn check_pivots(u: &DMatrix<f64>, scale: f64) -> Result<()> {
    let threshold = 1e-14 * scale;
    let min_pivot = u.diagonal().iter().map(|p| p.abs()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > threshold) {
        return Err(Error::SingularMatrix { pivot: min_pivot });
    }
    Ok(())
}

pub fn sym_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn skew_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a - a.transpose()) * 0.5
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Ascending.
    pub values: DVector<f64>,
    /// Columns are the matching orthonormal eigenvectors.
    pub vectors: DMatrix<f64>,
}

const JACOBI_MAX_SWEEPS: usize = 30;
const JACOBI_THRESHOLD: f64 = 1e-14;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// The input is symmetrized first, so small asymmetries from upstream
/// rounding are harmless.
pub fn sym_eig(s: &DMatrix<f64>) -> SymEigen {
    assert!(s.is_square(), "sym_eig needs a square matrix");
    let n = s.nrows();
    let mut a = sym_part(s);
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= JACOBI_THRESHOLD * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                // A <- G^T A G with the rotation acting on rows/cols p and q.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &v.column(i));
    }
    SymEigen { values, vectors }
}

pub fn min_sym_eigenvalue(s: &DMatrix<f64>) -> f64 {
    sym_eig(s).values[0]
}

/// Largest real part over the spectrum of a general square matrix.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    if a.nrows() == 2 {
        let tr = a[(0, 0)] + a[(1, 1)];
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        let disc = tr * tr / 4.0 - det;
        return if disc >= 0.0 {
            tr / 2.0 + disc.sqrt()
        } else {
            tr / 2.0
        };
    }
    a.complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves `Aᵀ X + X A + W = 0` through the Kronecker-vectorized system.
pub fn solve_lyapunov(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || w.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            what: "solve_lyapunov: A and W must be n×n",
            expected: n,
            got: w.nrows(),
        });
    }
    let abscissa = spectral_abscissa(a);
    if !(abscissa < 0.0) {
        return Err(Error::NotHurwitz { abscissa });
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let k = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, w.iter().map(|x| -x));
    let x = solve_linear_vec(&k, &rhs).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::NotHurwitz { abscissa },
        other => other,
    })?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok(sym_part(&x))
}

/// Stabilizing solution of `AᵀP + PA − PBBᵀP + CᵀC = 0`.
#[derive(Debug, Clone)]
pub struct CareSolution {
    pub p: DMatrix<f64>,
    /// Frobenius norm of the Riccati residual at `p`.
    pub residual_norm: f64,
    /// Max real part of `eig(A − BBᵀP)`.
    pub closed_loop_spectral_abscissa: f64,
}

const SIGN_MAX_ITERS: usize = 100;
const SIGN_TOL: f64 = 1e-13;
const REFINEMENT_STEPS: usize = 3;

pub fn care_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    let g = b * b.transpose();
    a.transpose() * p + p * a - p * &g * p + c.transpose() * c
}

/// Solves the continuous-time algebraic Riccati equation.
///
/// The stable invariant subspace of the Hamiltonian matrix is obtained from
/// a determinant-scaled matrix sign iteration and then polished by
/// Newton–Kleinman steps.
pub fn solve_care(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<CareSolution> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            what: "solve_care: A must be square",
            expected: n,
            got: a.ncols(),
        });
    }
    if b.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "solve_care: rows of B",
            expected: n,
            got: b.nrows(),
        });
    }
    if c.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "solve_care: columns of C",
            expected: n,
            got: c.ncols(),
        });
    }

    let g = b * b.transpose();
    let q = c.transpose() * c;
    let mut ham = DMatrix::<f64>::zeros(2 * n, 2 * n);
    ham.view_mut((0, 0), (n, n)).copy_from(a);
    ham.view_mut((0, n), (n, n)).copy_from(&(-&g));
    ham.view_mut((n, 0), (n, n)).copy_from(&(-&q));
    ham.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let sign = matrix_sign(&ham)?;

    // (sign(H) + I) [I; P] = 0 on the stable subspace.
    let eye = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::<f64>::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&sign.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n))
        .copy_from(&(sign.view((n, n), (n, n)) + &eye));
    let mut rhs = DMatrix::<f64>::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(sign.view((0, 0), (n, n)) + &eye)));
    rhs.view_mut((n, 0), (n, n))
        .copy_from(&(-sign.view((n, 0), (n, n))));
    let p = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::NoStabilizingSolution(format!("subspace solve failed: {e}")))?;
    let mut p = sym_part(&p);

    let mut residual = care_residual(a, b, c, &p).norm();
    for _ in 0..REFINEMENT_STEPS {
        let Ok(refined) = newton_kleinman_step(a, &g, &q, &p) else {
            break;
        };
        let refined_residual = care_residual(a, b, c, &refined).norm();
        if refined_residual < residual {
            p = refined;
            residual = refined_residual;
        } else {
            break;
        }
    }

    let closed_loop = a - &g * &p;
    let abscissa = spectral_abscissa(&closed_loop);
    if !(abscissa < 0.0) || !p.iter().all(|x| x.is_finite()) {
        return Err(Error::NoStabilizingSolution(format!(
            "closed-loop spectral abscissa {abscissa:e}"
        )));
    }
    Ok(CareSolution {
        p,
        residual_norm: residual,
        closed_loop_spectral_abscissa: abscissa,
    })
}

/// One Newton–Kleinman step: solve the Lyapunov equation for the closed loop of `p`.
pub fn newton_kleinman_step(
    a: &DMatrix<f64>,
    g: &DMatrix<f64>,
    q: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let closed = a - g * p;
    let w = q + p * g * p;
    solve_lyapunov(&closed, &w)
}

fn matrix_sign(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = h.nrows() as f64;
    let mut z = h.clone();
    let mut prev_change = f64::INFINITY;
    for _ in 0..SIGN_MAX_ITERS {
        let lu = z.clone().lu();
        let u = lu.u();
        let log_det: f64 = u.diagonal().iter().map(|x| x.abs().ln()).sum();
        if !log_det.is_finite() {
            return Err(Error::NoStabilizingSolution(
                "Hamiltonian matrix has eigenvalues on the imaginary axis".into(),
            ));
        }
        let zinv = lu
            .try_inverse()
            .ok_or_else(|| Error::NoStabilizingSolution("sign iteration hit a singular iterate".into()))?;
        let scale = (log_det / dim).exp();
        let next = (&z / scale + zinv * scale) * 0.5;
        let change = (&next - &z).norm();
        let norm = next.norm();
        z = next;
        // Quadratic convergence stalls at rounding level; accept once it stops improving.
        if change <= SIGN_TOL * norm || (change <= 1e-8 * norm && change >= prev_change) {
            return Ok(z);
        }
        prev_change = change;
    }
    Err(Error::NoStabilizingSolution(format!(
        "sign iteration did not converge in {SIGN_MAX_ITERS} steps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let x = solve_linear_vec(&DMatrix::identity(3, 3), &DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0, 3.0]);
        let x = solve_linear_vec(&dmatrix![2.0, 0.0; 0.0, 4.0], &DVector::from_vec(vec![2.0, 8.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = dmatrix![1.0, 2.0; 2.0, 4.0];
        let err = solve_linear_vec(&a, &DVector::from_vec(vec![1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));
    }

    #[test]
    fn sym_eig_small_cases() {
        let e = sym_eig(&dmatrix![3.0, 0.0; 0.0, 1.0]);
        assert_eq!(e.values.as_slice(), &[1.0, 3.0]);
        let e = sym_eig(&dmatrix![0.0, 1.0; 1.0, 0.0]);
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lyapunov_examples() {
        let x = solve_lyapunov(&(-DMatrix::identity(2, 2)), &(DMatrix::identity(2, 2) * 2.0)).unwrap();
        assert!(close(&x, &DMatrix::identity(2, 2), 1e-14));

        let x = solve_lyapunov(&dmatrix![-1.0, 0.0; 0.0, -2.0], &dmatrix![2.0, 3.0; 3.0, 8.0]).unwrap();
        assert!(close(&x, &dmatrix![1.0, 1.0; 1.0, 2.0], 1e-14));

        let x = solve_lyapunov(&dmatrix![-3.0], &dmatrix![6.0]).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let err = solve_lyapunov(&dmatrix![0.5, 0.0; 0.0, -1.0], &DMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::NotHurwitz { .. }));
    }

    #[test]
    fn care_scalar_case() {
        let sol = solve_care(&dmatrix![-1.0], &dmatrix![1.0], &dmatrix![1.0]).unwrap();
        assert!((sol.p[(0, 0)] - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!(sol.closed_loop_spectral_abscissa < 0.0);
    }

    #[test]
    fn care_zero_cost_gives_zero() {
        let a = dmatrix![-1.0, 0.3; 0.0, -2.0];
        let sol = solve_care(&a, &dmatrix![1.0; 0.5], &DMatrix::zeros(1, 2)).unwrap();
        assert!(sol.p.norm() < 1e-12);
    }

    #[test]
    fn care_rejects_unstabilizable() {
        // Unstable mode with no input and no output.
        let a = dmatrix![1.0, 0.0; 0.0, -1.0];
        let err = solve_care(&a, &dmatrix![0.0; 1.0], &dmatrix![0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NoStabilizingSolution(_)));
    }

    #[test]
    fn spectral_abscissa_of_rotation_and_diag() {
        assert_eq!(spectral_abscissa(&dmatrix![0.0, 1.0; -1.0, -0.2]), -0.1);
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -3.0, 0.5]));
        assert!((spectral_abscissa(&a) - 0.5).abs() < 1e-12);
    }
}
