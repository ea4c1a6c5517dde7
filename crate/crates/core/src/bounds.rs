//! Closed-form bounds on the quench signal `Q_r(t)`.
//!
//! The hybrid bound is the sum of an exponentially decaying short-range term
//! `c1 (e^{v1 t} - 1) e^{-mu r}` and an algebraic long-range term
//! `c2 (e^{v2 t} - 1) / ((1 - mu) r)^alpha`, with
//! `c1 = 1/λ, v1 = 2 e λ², c2 = 1/(12 λ), v2 = 24 λ²`. The Hastings-Koma
//! bound is `c (e^{v t} - 1) / r^alpha` with `c = 1/(2 λ 2^alpha)` and
//! `v = 4 λ² 2^alpha`.
//!
//! Exponents such as `v2 t` leave the `f64` range for modest `t`, so every
//! term is evaluated as a natural logarithm and only exponentiated for
//! reporting. Reported values are capped at 1; the raw logarithm is kept.

use std::f64::consts::{E, LN_10};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::{infinite_lattice_lambda, Exponent};
use crate::error::{Error, Result};
use crate::hopseries::new_jn_bound;
use crate::search::{bisect, golden_section};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HkConstants {
    pub c: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub exponent: Exponent,
    pub lambda: f64,
    pub c1: f64,
    pub v1: f64,
    pub c2: f64,
    pub v2: f64,
    /// Absent in the nearest-neighbor limit, where `2^alpha` diverges.
    pub hk: Option<HkConstants>,
}

impl BoundConstants {
    /// Constants from the infinite-lattice λ.
    pub fn new(exponent: Exponent) -> Self {
        Self::with_lambda(exponent, infinite_lattice_lambda(exponent))
    }

    pub fn with_lambda(exponent: Exponent, lambda: f64) -> Self {
        let l2 = lambda * lambda;
        let hk = exponent.value().map(|a| {
            let p = 2f64.powf(a);
            HkConstants { c: 1.0 / (2.0 * lambda * p), v: 4.0 * l2 * p }
        });
        Self {
            exponent,
            lambda,
            c1: 1.0 / lambda,
            v1: 2.0 * l2 * E,
            c2: 1.0 / (12.0 * lambda),
            v2: 24.0 * l2,
            hk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuPolicy {
    Fixed(f64),
    /// 64-point grid on `[0.01, 0.99]` plus golden-section refinement.
    Optimized,
}

impl MuPolicy {
    pub fn fixed(mu: f64) -> Result<Self> {
        check_mu(mu)?;
        Ok(MuPolicy::Fixed(mu))
    }
}

pub const MU_GRID_POINTS: usize = 64;
pub const MU_GRID_LO: f64 = 0.01;
pub const MU_GRID_HI: f64 = 0.99;
pub const MU_REFINE_TOL: f64 = 1e-6;

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidMu(mu))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTime(t))
    }
}

fn check_distance(r: f64) -> Result<()> {
    if r >= 1.0 {
        Ok(())
    } else {
        Err(Error::ZeroDistance)
    }
}

/// `ln(e^x - 1)` for `x >= 0`; `-inf` at `x = 0`.
pub fn ln_expm1(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else if x < 30.0 {
        x.exp_m1().ln()
    } else {
        x + (-(-x).exp()).ln_1p()
    }
}

/// `ln(e^a + e^b)`.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

pub fn ln_short_range_term(r: f64, t: f64, mu: f64, k: &BoundConstants) -> f64 {
    k.c1.ln() + ln_expm1(k.v1 * t) - mu * r
}

pub fn ln_long_range_term(r: f64, t: f64, mu: f64, k: &BoundConstants) -> f64 {
    match k.exponent {
        Exponent::Infinite => f64::NEG_INFINITY,
        Exponent::Finite(a) => k.c2.ln() + ln_expm1(k.v2 * t) - a * ((1.0 - mu) * r).ln(),
    }
}

/// `c1 (e^{v1 t} - 1) e^{-mu r}`, uncapped.
pub fn short_range_term(r: f64, t: f64, mu: f64, k: &BoundConstants) -> Result<f64> {
    check_distance(r)?;
    check_time(t)?;
    check_mu(mu)?;
    Ok(ln_short_range_term(r, t, mu, k).exp())
}

/// `c2 (e^{v2 t} - 1) / ((1 - mu) r)^alpha`, uncapped; zero for `alpha = inf`.
pub fn long_range_term(r: f64, t: f64, mu: f64, k: &BoundConstants) -> Result<f64> {
    check_distance(r)?;
    check_time(t)?;
    check_mu(mu)?;
    Ok(ln_long_range_term(r, t, mu, k).exp())
}

fn ln_hybrid(r: f64, t: f64, mu: f64, k: &BoundConstants) -> f64 {
    ln_add_exp(ln_short_range_term(r, t, mu, k), ln_long_range_term(r, t, mu, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEval {
    /// `min(raw, 1)`.
    pub value: f64,
    /// Natural log of the uncapped bound.
    pub ln_raw: f64,
    pub term_short: f64,
    pub term_long: f64,
    pub mu: f64,
}

impl BoundEval {
    pub fn log10_raw(&self) -> f64 {
        self.ln_raw / LN_10
    }
}

fn capped(ln_raw: f64) -> f64 {
    if ln_raw >= 0.0 {
        1.0
    } else {
        ln_raw.exp()
    }
}

fn eval_at(r: f64, t: f64, mu: f64, k: &BoundConstants) -> BoundEval {
    let ls = ln_short_range_term(r, t, mu, k);
    let ll = ln_long_range_term(r, t, mu, k);
    let ln_raw = ln_add_exp(ls, ll);
    BoundEval { value: capped(ln_raw), ln_raw, term_short: ls.exp(), term_long: ll.exp(), mu }
}

/// The mu in `[0.01, 0.99]` minimizing the uncapped hybrid bound at `(r, t)`.
pub fn optimal_mu(r: f64, t: f64, k: &BoundConstants) -> f64 {
    let step = (MU_GRID_HI - MU_GRID_LO) / (MU_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..MU_GRID_POINTS).map(|i| MU_GRID_LO + step * i as f64).collect();
    let (best, best_val) = grid
        .iter()
        .enumerate()
        .map(|(i, &mu)| (i, ln_hybrid(r, t, mu, k)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(MU_GRID_POINTS - 1)];
    let (mu_ref, val_ref) = golden_section(|mu| ln_hybrid(r, t, mu, k), lo, hi, MU_REFINE_TOL);
    if val_ref < best_val {
        mu_ref
    } else {
        grid[best]
    }
}

/// Hybrid bound at distance `r >= 1` and time `t >= 0`.
pub fn hybrid_bound(r: f64, t: f64, policy: MuPolicy, k: &BoundConstants) -> Result<BoundEval> {
    check_distance(r)?;
    check_time(t)?;
    let mu = match policy {
        MuPolicy::Fixed(mu) => {
            check_mu(mu)?;
            mu
        }
        MuPolicy::Optimized if t == 0.0 => 0.5,
        MuPolicy::Optimized => optimal_mu(r, t, k),
    };
    Ok(eval_at(r, t, mu, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HkEval {
    pub value: f64,
    pub ln_raw: f64,
}

impl HkEval {
    pub fn log10_raw(&self) -> f64 {
        self.ln_raw / LN_10
    }
}

fn ln_hk(r: f64, t: f64, alpha: f64, hk: &HkConstants) -> f64 {
    hk.c.ln() + ln_expm1(hk.v * t) - alpha * r.ln()
}

/// Hastings-Koma bound; rejects `alpha = inf`.
pub fn hk_bound(r: f64, t: f64, k: &BoundConstants) -> Result<HkEval> {
    check_distance(r)?;
    check_time(t)?;
    let (alpha, hk) = match (k.exponent, k.hk) {
        (Exponent::Finite(a), Some(hk)) => (a, hk),
        _ => return Err(Error::InfiniteExponent),
    };
    let ln_raw = ln_hk(r, t, alpha, &hk);
    Ok(HkEval { value: capped(ln_raw), ln_raw })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    pub r: f64,
    pub t_star: f64,
    /// mu at the contour point (the optimizer's choice under `Optimized`).
    pub mu: f64,
}

pub const CONTOUR_REL_TOL: f64 = 1e-9;

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidEpsilon(eps))
    }
}

/// Solves `g(t) = ln eps` for a `g` increasing from `-inf` at `t = 0`.
fn solve_time(ln_eps: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
    let mut hi = 1.0;
    if g(hi) >= ln_eps {
        while hi > 1e-300 && g(0.5 * hi) >= ln_eps {
            hi *= 0.5;
        }
    } else {
        while g(hi) < ln_eps {
            hi *= 2.0;
        }
    }
    bisect(|t| g(t) - ln_eps, 0.5 * hi, hi, CONTOUR_REL_TOL, 0.0)
}

/// Time `t*` at which the uncapped hybrid bound reaches `eps`, for each `r`.
pub fn causal_contour(eps: f64, rs: &[f64], policy: MuPolicy, k: &BoundConstants) -> Result<Vec<ContourPoint>> {
    check_epsilon(eps)?;
    if let MuPolicy::Fixed(mu) = policy {
        check_mu(mu)?;
    }
    for &r in rs {
        check_distance(r)?;
    }
    let ln_eps = eps.ln();
    Ok(rs
        .par_iter()
        .map(|&r| {
            let ln_bound = |t: f64| match policy {
                MuPolicy::Fixed(mu) => ln_hybrid(r, t, mu, k),
                MuPolicy::Optimized => ln_hybrid(r, t, optimal_mu(r, t, k), k),
            };
            let t_star = solve_time(ln_eps, ln_bound);
            let mu = match policy {
                MuPolicy::Fixed(mu) => mu,
                MuPolicy::Optimized => optimal_mu(r, t_star, k),
            };
            ContourPoint { r, t_star, mu }
        })
        .collect())
}

/// Time at which the uncapped Hastings-Koma bound reaches `eps`.
pub fn hk_contour_time(eps: f64, r: f64, k: &BoundConstants) -> Result<f64> {
    check_epsilon(eps)?;
    check_distance(r)?;
    let (alpha, hk) = match (k.exponent, k.hk) {
        (Exponent::Finite(a), Some(hk)) => (a, hk),
        _ => return Err(Error::InfiniteExponent),
    };
    Ok(solve_time(eps.ln(), |t| ln_hk(r, t, alpha, &hk)))
}

/// Distance beyond which the long-range term dominates the short-range one
/// at time `t` and fixed `mu`; `+inf` when `alpha = inf`.
///
/// `ln(long/short) = C(t) - alpha ln((1-mu) r) + mu r` is convex in `r`
/// with its minimum at `r = alpha/mu`. If it is non-negative there the long
/// term dominates at every `r >= 1` and 1 is returned; otherwise the root
/// to the right of the minimum is found by doubling and bisection.
pub fn crossover_rc(t: f64, mu: f64, k: &BoundConstants) -> Result<f64> {
    check_mu(mu)?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidTime(t));
    }
    let alpha = match k.exponent {
        Exponent::Infinite => return Ok(f64::INFINITY),
        Exponent::Finite(a) => a,
    };
    let gap = |r: f64| ln_long_range_term(r, t, mu, k) - ln_short_range_term(r, t, mu, k);
    let r_min = (alpha / mu).max(1.0);
    if gap(r_min) >= 0.0 {
        return Ok(1.0);
    }
    let mut hi = 2.0 * r_min;
    while gap(hi) < 0.0 {
        hi *= 2.0;
    }
    Ok(bisect(gap, r_min, hi, 1e-13, 0.0))
}

fn ceil_mu_r(mu: f64, r: f64) -> u64 {
    (mu * r).ceil() as u64
}

/// Log of `Σ_{n=1}^{⌈mu r⌉-1} (2λt)^n/n! · (12λ)^(n-1) (r-n+1)^-alpha`,
/// the series whose tail the long-range term bounds.
pub fn ln_long_range_partial_sum(r: u64, t: f64, mu: f64, k: &BoundConstants) -> Result<f64> {
    check_time(t)?;
    check_mu(mu)?;
    let upper = ceil_mu_r(mu, r as f64);
    let x = 2.0 * k.lambda * t;
    let mut acc = f64::NEG_INFINITY;
    let mut ln_fact = 0.0;
    for n in 1..upper {
        ln_fact += (n as f64).ln();
        let b = new_jn_bound(n as usize, r, k.lambda, k.exponent)?;
        acc = ln_add_exp(acc, n as f64 * x.ln() - ln_fact + b.ln());
    }
    Ok(acc)
}

/// Log of `Σ_{n=⌈mu r⌉}^{n_cut} (2λt)^n/n! · λ^(n-1)`, with `λ^(n-1)` kept in
/// log form so large `n_cut` does not overflow.
pub fn ln_short_range_partial_sum(r: u64, t: f64, mu: f64, n_cut: u64, k: &BoundConstants) -> Result<f64> {
    check_time(t)?;
    check_mu(mu)?;
    let lower = ceil_mu_r(mu, r as f64).max(1);
    let x = 2.0 * k.lambda * t;
    let mut acc = f64::NEG_INFINITY;
    let mut ln_fact = 0.0;
    for n in 1..=n_cut {
        ln_fact += (n as f64).ln();
        if n >= lower {
            let ln_b = (n - 1) as f64 * k.lambda.ln();
            acc = ln_add_exp(acc, n as f64 * x.ln() - ln_fact + ln_b);
        }
    }
    Ok(acc)
}
