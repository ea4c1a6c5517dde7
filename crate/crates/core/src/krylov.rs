//! Lanczos approximation of `exp(-i H τ) ψ` for Hermitian, matrix-free `H`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Hermitian operator known only through its action on vectors.
pub trait HermitianOperator: Sync {
    fn dim(&self) -> usize;
    /// `out = H x`; `out` is overwritten.
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrylovConfig {
    /// Krylov subspace dimension.
    pub m: usize,
    /// Nominal time step.
    pub dt: f64,
    /// Per-step error tolerance.
    pub tol: f64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self { m: 30, dt: 0.05, tol: 1e-10 }
    }
}

impl KrylovConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidKrylovConfig(format!("m = {} must be at least 2", self.m)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidKrylovConfig(format!("dt = {} must be positive", self.dt)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidKrylovConfig(format!("tol = {} must be positive", self.tol)));
        }
        Ok(())
    }
}

pub const MAX_HALVINGS: u32 = 10;

const CHUNK: usize = 1 << 12;

// Fixed chunking keeps reductions bitwise reproducible across thread counts.
pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let partial: Vec<Complex64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u.conj() * v).sum())
        .collect();
    partial.into_iter().sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    let partial: Vec<f64> = a.par_chunks(CHUNK).map(|x| x.iter().map(|u| u.norm_sqr()).sum()).collect();
    partial.into_iter().sum::<f64>().sqrt()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(y, x)| *y += alpha * x);
}

/// Orthonormal Lanczos basis and tridiagonal projection.
struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    diag: Vec<f64>,
    off: Vec<f64>,
    /// `β_m`, the coupling out of the subspace (0 on breakdown).
    residual: f64,
}

fn lanczos<H: HermitianOperator + ?Sized>(op: &H, start: &[Complex64], m: usize, scale: f64) -> Lanczos {
    let beta0 = norm(start);
    let mut v: Vec<Complex64> = start.iter().map(|x| *x / beta0).collect();
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    let mut diag = Vec::with_capacity(m);
    let mut off: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![Complex64::default(); start.len()];
    let mut residual = 0.0;
    for k in 0..m {
        op.apply(&v, &mut w);
        let a = dot(&v, &w).re;
        axpy(Complex64::new(-a, 0.0), &v, &mut w);
        if let Some(prev) = basis.last() {
            axpy(Complex64::new(-off[k - 1], 0.0), prev, &mut w);
        }
        basis.push(std::mem::take(&mut v));
        diag.push(a);
        // Two passes of full reorthogonalization.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let b = norm(&w);
        if b <= 1e-13 * scale {
            residual = 0.0;
            break;
        }
        residual = b;
        if k + 1 < m {
            off.push(b);
            v = w.iter().map(|x| *x / b).collect();
        }
    }
    Lanczos { basis, diag, off, residual }
}

/// `exp(-i T τ) e_1` for the projected tridiagonal `T`.
fn small_exp(diag: &[f64], off: &[f64], tau: f64) -> Vec<Complex64> {
    let k = diag.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = diag[i];
        if i + 1 < k {
            t[(i, i + 1)] = off[i];
            t[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (0..k)
        .map(|j| {
            (0..k)
                .map(|l| Complex64::from_polar(eig.eigenvectors[(0, l)] * eig.eigenvectors[(j, l)], -eig.eigenvalues[l] * tau))
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KrylovStats {
    pub steps: usize,
    pub halvings: u32,
    pub max_error_estimate: f64,
}

/// Advances `state` by at most `tau`; returns the step actually taken and
/// its error estimate. Halves the step (reusing the basis) until the
/// residual indicator `β_m |[exp(-iTτ) e_1]_m|` is below `tol`.
pub fn krylov_step<H: HermitianOperator + ?Sized>(
    op: &H,
    state: &mut Vec<Complex64>,
    tau: f64,
    config: &KrylovConfig,
    stats: &mut KrylovStats,
) -> Result<f64> {
    let beta = norm(state);
    if beta == 0.0 || tau == 0.0 {
        return Ok(tau);
    }
    let scale = op_scale(op, state, beta);
    let lz = lanczos(op, state, config.m, scale);
    let mut step = tau;
    let mut halvings = 0;
    loop {
        let y = small_exp(&lz.diag, &lz.off, step);
        let estimate = beta * lz.residual * y.last().map_or(0.0, |c| c.norm());
        if estimate <= config.tol {
            let mut next = vec![Complex64::default(); state.len()];
            for (q, c) in lz.basis.iter().zip(&y) {
                axpy(c * beta, q, &mut next);
            }
            *state = next;
            stats.steps += 1;
            stats.halvings += halvings;
            stats.max_error_estimate = stats.max_error_estimate.max(estimate);
            return Ok(step);
        }
        if halvings == MAX_HALVINGS {
            return Err(Error::KrylovNonConvergence { halvings, estimate, tol: config.tol, dt: step });
        }
        step *= 0.5;
        halvings += 1;
    }
}

fn op_scale<H: HermitianOperator + ?Sized>(op: &H, state: &[Complex64], beta: f64) -> f64 {
    let mut w = vec![Complex64::default(); state.len()];
    op.apply(state, &mut w);
    (norm(&w) / beta).max(1.0)
}

/// Evolves `state` by `exp(-i H t)` in steps of at most `config.dt`.
pub fn krylov_evolve<H: HermitianOperator + ?Sized>(
    op: &H,
    state: &mut Vec<Complex64>,
    t: f64,
    config: &KrylovConfig,
    stats: &mut KrylovStats,
) -> Result<()> {
    config.validate()?;
    if state.len() != op.dim() {
        return Err(Error::LengthMismatch { expected: op.dim(), got: state.len() });
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidTime(t));
    }
    let mut remaining = t;
    while remaining > 0.0 {
        let tau = config.dt.min(remaining);
        let taken = krylov_step(op, state, tau, config, stats)?;
        remaining -= taken;
        if remaining <= 1e-15 * t {
            break;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense Hermitian matrix as an operator.
    struct Dense(DMatrix<Complex64>);

    impl HermitianOperator for Dense {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
            for (i, o) in out.iter_mut().enumerate() {
                *o = (0..x.len()).map(|j| self.0[(i, j)] * x[j]).sum();
            }
        }
    }

    fn test_matrix(n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            let re = ((a + 1.0) * (b + 2.0)).sin();
            let im = if i == j { 0.0 } else { ((a + 3.0) * (b + 1.0)).cos() * if i < j { 1.0 } else { -1.0 } };
            Complex64::new(re, im)
        })
    }

    fn dense_evolve(h: &DMatrix<Complex64>, x: &[Complex64], t: f64) -> Vec<Complex64> {
        let eig = SymmetricEigen::new(h.clone());
        let v = &eig.eigenvectors;
        let n = x.len();
        let coeff: Vec<Complex64> = (0..n)
            .map(|l| (0..n).map(|j| v[(j, l)].conj() * x[j]).sum::<Complex64>() * Complex64::from_polar(1.0, -eig.eigenvalues[l] * t))
            .collect();
        (0..n).map(|j| (0..n).map(|l| v[(j, l)] * coeff[l]).sum()).collect()
    }

    fn start(n: usize) -> Vec<Complex64> {
        let v: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64 * 0.7).cos(), (i as f64 * 0.3).sin())).collect();
        let b = norm(&v);
        v.into_iter().map(|x| x / b).collect()
    }

    #[test]
    fn zero_step_is_identity() {
        let op = Dense(test_matrix(12));
        let mut s = start(12);
        let before = s.clone();
        krylov_evolve(&op, &mut s, 0.0, &KrylovConfig::default(), &mut KrylovStats::default()).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn matches_dense_exponential() {
        let h = test_matrix(60);
        let op = Dense(h.clone());
        let mut s = start(60);
        let exact = dense_evolve(&h, &s, 1.3);
        let mut stats = KrylovStats::default();
        krylov_evolve(&op, &mut s, 1.3, &KrylovConfig { m: 20, dt: 0.1, tol: 1e-12 }, &mut stats).unwrap();
        let err = s.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "err {err}");
        assert!((norm(&s) - 1.0).abs() < 1e-12);
        assert!(stats.steps >= 13);
    }

    #[test]
    fn small_space_breaks_down_exactly() {
        // Dimension below m: the Krylov space is the whole space.
        let h = test_matrix(6);
        let op = Dense(h.clone());
        let mut s = start(6);
        let exact = dense_evolve(&h, &s, 5.0);
        krylov_evolve(&op, &mut s, 5.0, &KrylovConfig { m: 30, dt: 5.0, tol: 1e-10 }, &mut KrylovStats::default()).unwrap();
        let err = s.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn oversized_step_is_halved() {
        let h = test_matrix(80);
        let op = Dense(h.clone());
        let mut s = start(80);
        let exact = dense_evolve(&h, &s, 1.0);
        let mut stats = KrylovStats::default();
        krylov_evolve(&op, &mut s, 1.0, &KrylovConfig { m: 8, dt: 1.0, tol: 1e-10 }, &mut stats).unwrap();
        assert!(stats.halvings > 0);
        let err = s.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "err {err}");
    }

    #[test]
    fn hopeless_step_reports_non_convergence() {
        let op = Dense(test_matrix(80) * Complex64::new(1e4, 0.0));
        let mut s = start(80);
        let res = krylov_evolve(&op, &mut s, 1.0, &KrylovConfig { m: 2, dt: 1.0, tol: 1e-14 }, &mut KrylovStats::default());
        assert!(matches!(res, Err(Error::KrylovNonConvergence { halvings: MAX_HALVINGS, .. })));
    }

    #[test]
    fn config_validation() {
        assert!(KrylovConfig { m: 1, ..Default::default() }.validate().is_err());
        assert!(KrylovConfig { dt: 0.0, ..Default::default() }.validate().is_err());
        assert!(KrylovConfig { tol: 0.0, ..Default::default() }.validate().is_err());
        let op = Dense(test_matrix(4));
        let mut s = start(5);
        assert!(matches!(
            krylov_evolve(&op, &mut s, 1.0, &KrylovConfig::default(), &mut KrylovStats::default()),
            Err(Error::LengthMismatch { expected: 4, got: 5 })
        ));
    }
}
