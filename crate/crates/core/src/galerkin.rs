//! Tensor-product Legendre spaces on a rectangle.
//!
//! `φᵢ` is the degree-`(i−1)` Legendre polynomial pulled back to an interval
//! and scaled to unit L² norm there; `ψᵢⱼ(z) = φᵢ(z₁)φⱼ(z₂)`. Indices in the
//! code are zero-based, so mode `(0, 0)` is the constant.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Rectangle {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self> {
        let finite = [x_lo, x_hi, y_lo, y_hi].iter().all(|v| v.is_finite());
        if !finite || !(x_lo < x_hi) || !(y_lo < y_hi) {
            return Err(Error::Config(format!(
                "invalid rectangle [{x_lo}, {x_hi}]×[{y_lo}, {y_hi}]"
            )));
        }
        Ok(Rectangle {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        })
    }

    /// `[−h, h]²`.
    pub fn square(half_width: f64) -> Result<Self> {
        Rectangle::new(-half_width, half_width, -half_width, half_width)
    }

    pub fn area(&self) -> f64 {
        (self.x_hi - self.x_lo) * (self.y_hi - self.y_lo)
    }

    pub fn contains(&self, z: &[f64; 2]) -> bool {
        (self.x_lo..=self.x_hi).contains(&z[0]) && (self.y_lo..=self.y_hi).contains(&z[1])
    }

    /// The rectangle scaled by `factor` about its center.
    pub fn scaled(&self, factor: f64) -> Rectangle {
        let (cx, cy) = (0.5 * (self.x_lo + self.x_hi), 0.5 * (self.y_lo + self.y_hi));
        let (hx, hy) = (
            0.5 * factor * (self.x_hi - self.x_lo),
            0.5 * factor * (self.y_hi - self.y_lo),
        );
        Rectangle {
            x_lo: cx - hx,
            x_hi: cx + hx,
            y_lo: cy - hy,
            y_hi: cy + hy,
        }
    }

    /// Cartesian product of `per_axis` equispaced samples per side, endpoints included.
    pub fn grid(&self, per_axis: usize) -> Vec<[f64; 2]> {
        let xs = linspace(self.x_lo, self.x_hi, per_axis);
        let ys = linspace(self.y_lo, self.y_hi, per_axis);
        xs.iter().flat_map(|&x| ys.iter().map(move |&y| [x, y])).collect()
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Value, first and second derivative of the Legendre polynomials
/// `P_0..P_{count-1}` at `t`.
fn legendre_table(count: usize, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; count];
    let mut dp = vec![0.0; count];
    let mut d2p = vec![0.0; count];
    if count == 0 {
        return (p, dp, d2p);
    }
    p[0] = 1.0;
    if count > 1 {
        p[1] = t;
        dp[1] = 1.0;
    }
    for k in 1..count.saturating_sub(1) {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * t * p[k] - kf * p[k - 1]) / (kf + 1.0);
        // P'_{k+1} = P'_{k-1} + (2k+1) P_k, and the same one level up.
        dp[k + 1] = dp[k - 1] + (2.0 * kf + 1.0) * p[k];
        d2p[k + 1] = d2p[k - 1] + (2.0 * kf + 1.0) * dp[k];
    }
    (p, dp, d2p)
}

/// Orthonormal Legendre function `φᵢ` on `[a, b]` (one-based `i`) and its derivative.
pub fn legendre_eval(i: usize, x: f64, interval: (f64, f64)) -> (f64, f64) {
    assert!(i >= 1, "basis index is one-based");
    let (a, b) = interval;
    let axis = Axis::new(a, b);
    let (v, d, _) = axis.eval(i, x);
    (v[i - 1], d[i - 1])
}

/// One axis of the tensor basis: the pullback `t = (2x − a − b)/(b − a)` and scaling.
#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64) -> Self {
        Axis { lo, hi }
    }

    /// `φ₁..φ_count` at `x` with first and second derivatives.
    fn eval(&self, count: usize, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let len = self.hi - self.lo;
        let t = (2.0 * x - self.lo - self.hi) / len;
        let dt = 2.0 / len;
        let (mut p, mut dp, mut d2p) = legendre_table(count, t);
        for k in 0..count {
            let norm = ((2 * k + 1) as f64 / len).sqrt();
            p[k] *= norm;
            dp[k] *= norm * dt;
            d2p[k] *= norm * dt * dt;
        }
        (p, dp, d2p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreBasis {
    pub degree: usize,
    pub domain: Rectangle,
}

/// Per-axis tables at one point: `(values, derivatives, second derivatives)` for x and y.
#[derive(Debug, Clone)]
pub struct BasisTables {
    pub x: (Vec<f64>, Vec<f64>, Vec<f64>),
    pub y: (Vec<f64>, Vec<f64>, Vec<f64>),
}

impl LegendreBasis {
    pub fn new(degree: usize, domain: Rectangle) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Config("basis degree must be at least 1".into()));
        }
        Ok(LegendreBasis { degree, domain })
    }

    /// Number of tensor modes `d²`.
    pub fn len(&self) -> usize {
        self.degree * self.degree
    }

    pub fn is_empty(&self) -> bool {
        self.degree == 0
    }

    pub fn tables(&self, z: &[f64; 2]) -> BasisTables {
        let d = self.degree;
        BasisTables {
            x: Axis::new(self.domain.x_lo, self.domain.x_hi).eval(d, z[0]),
            y: Axis::new(self.domain.y_lo, self.domain.y_hi).eval(d, z[1]),
        }
    }

    /// `ψ` for all modes, row-major in `(i, j)`.
    pub fn values(&self, z: &[f64; 2]) -> Vec<f64> {
        let t = self.tables(z);
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.degree {
            for j in 0..self.degree {
                out.push(t.x.0[i] * t.y.0[j]);
            }
        }
        out
    }
}

/// Tensor Gauss–Legendre rule on a rectangle.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate<F: Fn(&[f64; 2]) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(z, w)| w * f(z)).sum()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor rule with `n_q` Gauss points per axis.
pub fn gauss_rule(n_q: usize, domain: &Rectangle) -> Result<QuadratureRule> {
    if n_q == 0 {
        return Err(Error::Config(
            "quadrature needs at least one node per axis".into(),
        ));
    }
    let (t, w) = gauss_legendre_1d(n_q);
    let map = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
        t.iter()
            .zip(&w)
            .map(|(&ti, &wi)| (0.5 * (lo + hi) + 0.5 * (hi - lo) * ti, 0.5 * (hi - lo) * wi))
            .collect()
    };
    let xs = map(domain.x_lo, domain.x_hi);
    let ys = map(domain.y_lo, domain.y_hi);
    let mut nodes = Vec::with_capacity(n_q * n_q);
    let mut weights = Vec::with_capacity(n_q * n_q);
    for &(x, wx) in &xs {
        for &(y, wy) in &ys {
            nodes.push([x, y]);
            weights.push(wx * wy);
        }
    }
    Ok(QuadratureRule { nodes, weights })
}

/// `V(z) = Σ αᵢⱼ ψᵢⱼ(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunctionApprox {
    pub basis: LegendreBasis,
    /// `alpha[(i, j)]` multiplies `φᵢ(z₁)φⱼ(z₂)`.
    pub alpha: DMatrix<f64>,
}

/// Value, gradient and Hessian at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VfaEval {
    pub value: f64,
    pub gradient: Vector2<f64>,
    pub hessian: Matrix2<f64>,
    /// The point lies outside the basis domain (polynomial extrapolation).
    pub extrapolated: bool,
}

impl ValueFunctionApprox {
    pub fn zeros(basis: LegendreBasis) -> Self {
        let d = basis.degree;
        ValueFunctionApprox {
            basis,
            alpha: DMatrix::zeros(d, d),
        }
    }

    /// L² projection of `f` onto the basis under `quad`.
    pub fn project<F: Fn(&[f64; 2]) -> f64>(basis: LegendreBasis, quad: &QuadratureRule, f: F) -> Self {
        let d = basis.degree;
        let mut alpha = DMatrix::zeros(d, d);
        for (z, w) in quad.nodes.iter().zip(&quad.weights) {
            let fz = w * f(z);
            let psi = basis.values(z);
            for i in 0..d {
                for j in 0..d {
                    alpha[(i, j)] += fz * psi[i * d + j];
                }
            }
        }
        ValueFunctionApprox { basis, alpha }
    }

    pub fn eval(&self, z: &[f64; 2]) -> VfaEval {
        let d = self.basis.degree;
        let t = self.basis.tables(z);
        let (px, dpx, d2px) = &t.x;
        let (py, dpy, d2py) = &t.y;
        let mut value = 0.0;
        let mut g = [0.0; 2];
        let mut h = [0.0; 3];
        for i in 0..d {
            // Contract over j first.
            let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
            for j in 0..d {
                let a = self.alpha[(i, j)];
                s0 += a * py[j];
                s1 += a * dpy[j];
                s2 += a * d2py[j];
            }
            value += px[i] * s0;
            g[0] += dpx[i] * s0;
            g[1] += px[i] * s1;
            h[0] += d2px[i] * s0;
            h[1] += dpx[i] * s1;
            h[2] += px[i] * s2;
        }
        VfaEval {
            value,
            gradient: Vector2::new(g[0], g[1]),
            hessian: Matrix2::new(h[0], h[1], h[1], h[2]),
            extrapolated: !self.basis.domain.contains(z),
        }
    }

    pub fn value(&self, z: &[f64; 2]) -> f64 {
        self.eval(z).value
    }

    pub fn gradient(&self, z: &[f64; 2]) -> Vector2<f64> {
        self.eval(z).gradient
    }

    /// Shift the constant mode so that `V(0) = 0`.
    pub fn normalize_at_origin(&mut self) {
        let v0 = self.value(&[0.0, 0.0]);
        let psi00 = 1.0 / self.basis.domain.area().sqrt();
        self.alpha[(0, 0)] -= v0 / psi00;
    }

    /// Writes the sidecar format: a header row, the basis row, then the
    /// `d` rows of the coefficient grid, all with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let r = &self.basis.domain;
        writeln!(out, "degree,x_lo,x_hi,y_lo,y_hi")?;
        writeln!(
            out,
            "{},{},{},{},{}",
            self.basis.degree,
            fmt17(r.x_lo),
            fmt17(r.x_hi),
            fmt17(r.y_lo),
            fmt17(r.y_hi)
        )?;
        for i in 0..self.basis.degree {
            let row: Vec<String> = (0..self.basis.degree)
                .map(|j| fmt17(self.alpha[(i, j)]))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
        if header != "degree,x_lo,x_hi,y_lo,y_hi" {
            return Err(Error::Parse(format!("unexpected header '{header}'")));
        }
        let meta: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Parse("missing basis row".into()))?
            .split(',')
            .collect();
        if meta.len() != 5 {
            return Err(Error::Parse("basis row needs 5 fields".into()));
        }
        let degree: usize = meta[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad degree '{}'", meta[0])))?;
        let nums: Vec<f64> = meta[1..].iter().map(|s| parse_f64(s)).collect::<Result<_>>()?;
        let domain = Rectangle::new(nums[0], nums[1], nums[2], nums[3])?;
        let basis = LegendreBasis::new(degree, domain)?;
        let mut alpha = DMatrix::zeros(degree, degree);
        for i in 0..degree {
            let row = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing coefficient row {i}")))?;
            let vals: Vec<f64> = row.split(',').map(parse_f64).collect::<Result<_>>()?;
            if vals.len() != degree {
                return Err(Error::Parse(format!(
                    "coefficient row {i} has {} entries, expected {degree}",
                    vals.len()
                )));
            }
            for (j, v) in vals.into_iter().enumerate() {
                alpha[(i, j)] = v;
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing data after coefficient grid".into()));
        }
        Ok(ValueFunctionApprox { basis, alpha })
    }
}

impl crate::models::StorageFunction for ValueFunctionApprox {
    fn value(&self, z: &DVector<f64>) -> f64 {
        self.eval(&[z[0], z[1]]).value
    }
    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        let g = self.eval(&[z[0], z[1]]).gradient;
        DVector::from_column_slice(g.as_slice())
    }
    fn hessian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let h = self.eval(&[z[0], z[1]]).hessian;
        DMatrix::from_column_slice(2, 2, h.as_slice())
    }
}

/// Decimal with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    let mut s = String::new();
    write!(s, "{x:.16e}").expect("formatting into a String");
    s
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad number '{s}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Rectangle {
        Rectangle::square(1.0).unwrap()
    }

    #[test]
    fn legendre_examples() {
        let (v, d) = legendre_eval(1, 0.37, (-1.0, 1.0));
        assert!((v - 0.5f64.sqrt()).abs() < 1e-15 && d == 0.0);
        let (v, d) = legendre_eval(2, 1.0, (-1.0, 1.0));
        let s = 1.5f64.sqrt();
        assert!((v - s).abs() < 1e-15 && (d - s).abs() < 1e-15);
        let (a, b) = (0.5, 2.5);
        let (v, d) = legendre_eval(2, b, (a, b));
        let s = (3.0 / (b - a)).sqrt();
        assert!((v - s).abs() < 1e-15);
        assert!((d - 2.0 * s / (b - a)).abs() < 1e-15);
    }

    #[test]
    fn legendre_derivative_matches_finite_differences() {
        for i in 1..=12 {
            for &x in &[-2.7, -0.4, 0.0, 1.3, 2.9] {
                let (_, d) = legendre_eval(i, x, (-3.0, 3.0));
                let h = 1e-6;
                let fd = (legendre_eval(i, x + h, (-3.0, 3.0)).0 - legendre_eval(i, x - h, (-3.0, 3.0)).0)
                    / (2.0 * h);
                assert!((d - fd).abs() <= 1e-8 * (1.0 + d.abs()), "i={i} x={x}");
            }
        }
    }

    #[test]
    fn gauss_rule_examples() {
        let q = gauss_rule(1, &unit()).unwrap();
        assert_eq!(q.nodes, vec![[0.0, 0.0]]);
        assert!((q.weights[0] - 4.0).abs() < 1e-15);

        let q = gauss_rule(2, &unit()).unwrap();
        let v = q.integrate(|z| z[0] * z[0]);
        assert!((v - 4.0 / 3.0).abs() < 1e-14);

        let r = Rectangle::new(-3.0, 1.0, 0.5, 2.0).unwrap();
        for n in 1..20 {
            let q = gauss_rule(n, &r).unwrap();
            assert!(q.weights.iter().all(|&w| w > 0.0));
            assert!((q.integrate(|_| 1.0) - r.area()).abs() < 1e-12);
        }
        assert!(gauss_rule(0, &r).is_err());
    }

    #[test]
    fn gauss_exactness_degree() {
        // n points integrate t^(2n-1) and t^(2n-2) exactly on [-1,1].
        for n in 1..16 {
            let (t, w) = gauss_legendre_1d(n);
            let k = 2 * n - 2;
            let got: f64 = t.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            let exact = 2.0 / (k as f64 + 1.0);
            assert!((got - exact).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn orthonormal_gram_matrix() {
        for d in [1, 4, 10, 15] {
            let domain = Rectangle::new(-3.0, 3.0, -2.0, 4.0).unwrap();
            let basis = LegendreBasis::new(d, domain).unwrap();
            let q = gauss_rule(d + 1, &domain).unwrap();
            let k = basis.len();
            let mut gram = DMatrix::<f64>::zeros(k, k);
            for (z, w) in q.nodes.iter().zip(&q.weights) {
                let psi = DVector::from_vec(basis.values(z));
                gram += &psi * psi.transpose() * *w;
            }
            let err = (gram - DMatrix::identity(k, k)).abs().max();
            assert!(err < 1e-12, "d={d} err={err:e}");
        }
    }

    #[test]
    fn eval_zero_and_single_mode() {
        let basis = LegendreBasis::new(3, unit()).unwrap();
        let v = ValueFunctionApprox::zeros(basis);
        let e = v.eval(&[0.3, -0.2]);
        assert_eq!(e.value, 0.0);
        assert_eq!(e.gradient, Vector2::zeros());

        let mut v = ValueFunctionApprox::zeros(basis);
        v.alpha[(1, 0)] = 1.0;
        let (x, y) = (0.6, -0.9);
        let e = v.eval(&[x, y]);
        assert!((e.value - 1.5f64.sqrt() * x * 0.5f64.sqrt()).abs() < 1e-15);
        let _ = y;
    }

    #[test]
    fn projected_quadratic() {
        let domain = Rectangle::square(3.0).unwrap();
        let basis = LegendreBasis::new(4, domain).unwrap();
        let q = gauss_rule(8, &domain).unwrap();
        let v = ValueFunctionApprox::project(basis, &q, |z| 0.5 * (z[0] * z[0] + z[1] * z[1]));
        let e = v.eval(&[1.0, 2.0]);
        assert!((e.value - 2.5).abs() < 1e-12);
        assert!((e.gradient - Vector2::new(1.0, 2.0)).norm() < 1e-12);
        assert!((e.hessian - Matrix2::identity()).norm() < 1e-12);
        assert!(!e.extrapolated);
        assert!(v.eval(&[3.5, 0.0]).extrapolated);
    }

    #[test]
    fn monomial_expansion_matches_for_low_degree() {
        // V = 1 + 2x − y + 0.5xy + 3x²y² − y², expanded in d=3 on an off-center box.
        let domain = Rectangle::new(-1.0, 2.0, -0.5, 1.5).unwrap();
        let basis = LegendreBasis::new(3, domain).unwrap();
        let q = gauss_rule(4, &domain).unwrap();
        let poly = |z: &[f64; 2]| {
            let (x, y) = (z[0], z[1]);
            1.0 + 2.0 * x - y + 0.5 * x * y + 3.0 * x * x * y * y - y * y
        };
        let grad = |x: f64, y: f64| {
            Vector2::new(
                2.0 + 0.5 * y + 6.0 * x * y * y,
                -1.0 + 0.5 * x + 6.0 * x * x * y - 2.0 * y,
            )
        };
        let hess = |x: f64, y: f64| {
            Matrix2::new(
                6.0 * y * y,
                0.5 + 12.0 * x * y,
                0.5 + 12.0 * x * y,
                6.0 * x * x - 2.0,
            )
        };
        let v = ValueFunctionApprox::project(basis, &q, poly);
        for z in domain.grid(7) {
            let e = v.eval(&z);
            assert!((e.value - poly(&z)).abs() < 1e-12);
            assert!((e.gradient - grad(z[0], z[1])).norm() < 1e-11);
            assert!((e.hessian - hess(z[0], z[1])).norm() < 1e-10);
        }
    }

    #[test]
    fn normalization_pins_origin() {
        let domain = Rectangle::square(2.0).unwrap();
        let basis = LegendreBasis::new(3, domain).unwrap();
        let q = gauss_rule(6, &domain).unwrap();
        let mut v = ValueFunctionApprox::project(basis, &q, |z| 4.0 + z[0] * z[0]);
        v.normalize_at_origin();
        assert!(v.value(&[0.0, 0.0]).abs() < 1e-14);
        assert!((v.value(&[1.0, 1.0]) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let domain = Rectangle::new(-3.0, 3.0, -2.5, 2.5).unwrap();
        let basis = LegendreBasis::new(3, domain).unwrap();
        let mut v = ValueFunctionApprox::zeros(basis);
        v.alpha[(1, 2)] = 0.1 + 0.2;
        v.alpha[(2, 0)] = -1.0 / 3.0;
        let back = ValueFunctionApprox::from_csv(&v.to_csv_string()).unwrap();
        assert_eq!(back, v);

        assert!(ValueFunctionApprox::from_csv("").is_err());
        assert!(ValueFunctionApprox::from_csv("degree,x_lo,x_hi,y_lo,y_hi\n2,0,1,0,1\n1,2\n").is_err());
    }
}
