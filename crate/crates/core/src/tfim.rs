//! Long-range transverse-field Ising chain
//! `H = Σ_{i<j} J_ij σ^x_i σ^x_j + B_z Σ_i σ^z_i` on the full `2^N` space.
//!
//! Basis convention: site `i` is bit `i` of the basis index (little-endian),
//! bit set = spin up (`σ^z = +1`). The polarized state `|↓…↓⟩` is index 0.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::{Boundary, CouplingModel, Geometry};
use crate::error::{Error, Result};
use crate::krylov::{dot, krylov_evolve, norm, HermitianOperator, KrylovConfig, KrylovStats};
use crate::xy::{check_times, QPoint};

/// Default cap on resident state-vector memory.
pub const DEFAULT_MEMORY_BUDGET: u64 = 8 << 30;
pub const MAX_SITES: usize = 26;

#[derive(Debug, Clone, PartialEq)]
pub struct TfimScenario {
    pub model: CouplingModel,
    pub b_z: f64,
    pub quench_site: usize,
    pub times: Vec<f64>,
}

impl TfimScenario {
    pub fn new(model: CouplingModel, b_z: f64, quench_site: usize, times: Vec<f64>) -> Result<Self> {
        let sites = model.geometry.sites().ok_or(Error::InfiniteLattice)?;
        if sites > MAX_SITES {
            return Err(Error::MemoryBudget { sites, needed: 16u64 << sites.min(63), budget: 16u64 << MAX_SITES });
        }
        if quench_site >= sites {
            return Err(Error::SiteOutOfRange { site: quench_site as i64, len: sites });
        }
        check_times(&times)?;
        Ok(Self { model, b_z, quench_site, times })
    }

    pub fn sites(&self) -> usize {
        self.model.geometry.sites().expect("validated finite")
    }

    pub fn dim(&self) -> usize {
        1 << self.sites()
    }

    pub fn boundary(&self) -> Boundary {
        match self.model.geometry {
            Geometry::Finite { boundary, .. } => boundary,
            Geometry::Infinite => unreachable!("validated finite"),
        }
    }

    pub fn distances(&self) -> Vec<usize> {
        let n = self.sites();
        match self.boundary() {
            Boundary::Periodic => (1..=n / 2).collect(),
            Boundary::Open => (1..n - self.quench_site).collect(),
        }
    }

    pub fn site_at(&self, r: usize) -> Result<usize> {
        let n = self.sites();
        match self.boundary() {
            Boundary::Periodic => Ok((self.quench_site + r) % n),
            Boundary::Open if self.quench_site + r < n => Ok(self.quench_site + r),
            Boundary::Open => Err(Error::SiteOutOfRange { site: (self.quench_site + r) as i64, len: n }),
        }
    }

    /// Bytes for the two branches, one scratch vector and the Krylov basis.
    pub fn memory_needed(&self, config: &KrylovConfig) -> u64 {
        (config.m as u64 + 4) * self.dim() as u64 * 16
    }

    pub fn check_memory(&self, config: &KrylovConfig, budget: u64) -> Result<()> {
        let needed = self.memory_needed(config);
        if needed > budget {
            return Err(Error::MemoryBudget { sites: self.sites(), needed, budget });
        }
        Ok(())
    }
}

/// Matrix-free TFIM Hamiltonian.
#[derive(Debug, Clone)]
pub struct TfimHamiltonian {
    sites: usize,
    b_z: f64,
    /// `(flip mask, J_ij)` for every bond with non-zero coupling.
    bonds: Vec<(usize, f64)>,
}

impl TfimHamiltonian {
    pub fn new(model: &CouplingModel, b_z: f64) -> Result<Self> {
        let sites = model.geometry.sites().ok_or(Error::InfiniteLattice)?;
        let mut bonds = Vec::new();
        for i in 0..sites {
            for j in (i + 1)..sites {
                let jij = model.coupling(i as i64, j as i64)?;
                if jij != 0.0 {
                    bonds.push(((1 << i) | (1 << j), jij));
                }
            }
        }
        Ok(Self { sites, b_z, bonds })
    }

    pub fn from_scenario(s: &TfimScenario) -> Result<Self> {
        Self::new(&s.model, s.b_z)
    }

    fn field(&self, index: usize) -> f64 {
        self.b_z * (2.0 * index.count_ones() as f64 - self.sites as f64)
    }
}

impl HermitianOperator for TfimHamiltonian {
    fn dim(&self) -> usize {
        1 << self.sites
    }

    // Gather form: each output entry reads its own flip partners, so the
    // parallel writes are disjoint.
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.par_iter_mut().enumerate().for_each(|(s, o)| {
            let mut acc = x[s] * self.field(s);
            for &(mask, j) in &self.bonds {
                acc += x[s ^ mask] * j;
            }
            *o = acc;
        });
    }
}

pub fn apply_hamiltonian(state: &[Complex64], scenario: &TfimScenario) -> Result<Vec<Complex64>> {
    let h = TfimHamiltonian::from_scenario(scenario)?;
    if state.len() != h.dim() {
        return Err(Error::LengthMismatch { expected: h.dim(), got: state.len() });
    }
    let mut out = vec![Complex64::default(); state.len()];
    h.apply(state, &mut out);
    Ok(out)
}

/// Applies the quench `e^{iπσ^y/4}`: `|↓⟩ -> (|↓⟩+|↑⟩)/√2`, `|↑⟩ -> (|↑⟩-|↓⟩)/√2`.
pub fn apply_quench(state: &mut [Complex64], site: usize) {
    let bit = 1 << site;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for s in 0..state.len() {
        if s & bit == 0 {
            let (down, up) = (state[s], state[s | bit]);
            state[s] = (down - up) * h;
            state[s | bit] = (down + up) * h;
        }
    }
}

/// `⟨ψ|σ^x_site|ψ⟩`.
pub fn sigma_x_expectation(state: &[Complex64], site: usize) -> f64 {
    let bit = 1 << site;
    state
        .par_chunks(1 << 12)
        .enumerate()
        .map(|(c, chunk)| {
            let base = c << 12;
            chunk.iter().enumerate().map(|(k, a)| (state[(base + k) ^ bit].conj() * a).re).sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum()
}

pub fn energy(h: &TfimHamiltonian, state: &[Complex64]) -> f64 {
    let mut w = vec![Complex64::default(); state.len()];
    h.apply(state, &mut w);
    dot(state, &w).re
}

/// Computed `Q_r(t)` with the diagnostics the invariants are checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfimResult {
    pub points: Vec<QPoint>,
    /// Largest `|⟨σ^x_r⟩|` seen on the unquenched branch (zero by parity).
    pub unquenched_max: f64,
    /// Largest deviation of either branch's norm from 1.
    pub norm_drift: f64,
    pub stats: KrylovStats,
}

pub const UNQUENCHED_TOL: f64 = 1e-9;
pub const NORM_TOL: f64 = 1e-10;

/// Evolves the quenched and unquenched branches through the requested times
/// and evaluates `Q_r(t)` for every distinct distance.
pub fn qrt_tfim(scenario: &TfimScenario, config: &KrylovConfig) -> Result<TfimResult> {
    qrt_tfim_with_budget(scenario, config, DEFAULT_MEMORY_BUDGET)
}

pub fn qrt_tfim_with_budget(scenario: &TfimScenario, config: &KrylovConfig, budget: u64) -> Result<TfimResult> {
    config.validate()?;
    scenario.check_memory(config, budget)?;
    let h = TfimHamiltonian::from_scenario(scenario)?;
    let dim = scenario.dim();
    let mut plain = vec![Complex64::default(); dim];
    plain[0] = Complex64::new(1.0, 0.0);
    let mut quenched = plain.clone();
    apply_quench(&mut quenched, scenario.quench_site);

    let distances = scenario.distances();
    let sites: Vec<usize> = distances.iter().map(|&r| scenario.site_at(r)).collect::<Result<_>>()?;
    let mut stats = KrylovStats::default();
    let mut points = Vec::with_capacity(distances.len() * scenario.times.len());
    let mut unquenched_max: f64 = 0.0;
    let mut norm_drift: f64 = 0.0;
    let mut now = 0.0;
    for &t in &scenario.times {
        let step = t - now;
        krylov_evolve(&h, &mut plain, step, config, &mut stats)?;
        krylov_evolve(&h, &mut quenched, step, config, &mut stats)?;
        now = t;
        norm_drift = norm_drift.max((norm(&plain) - 1.0).abs()).max((norm(&quenched) - 1.0).abs());
        for (&r, &site) in distances.iter().zip(&sites) {
            let base = sigma_x_expectation(&plain, site);
            let with = sigma_x_expectation(&quenched, site);
            unquenched_max = unquenched_max.max(base.abs());
            points.push(QPoint { t, r, q: 0.5 * (with - base).abs() });
        }
    }
    if unquenched_max > UNQUENCHED_TOL {
        return Err(Error::Invariant(format!("unquenched <sigma^x> = {unquenched_max:e} should vanish by parity")));
    }
    if norm_drift > NORM_TOL {
        return Err(Error::Invariant(format!("norm drift {norm_drift:e} exceeds {NORM_TOL:e}")));
    }
    Ok(TfimResult { points, unquenched_max, norm_drift, stats })
}
