//! Long-range XY chain restricted to the single-excitation sector.
//!
//! `½(σ^xσ^x + σ^yσ^y) = σ⁺σ⁻ + σ⁻σ⁺`, so on states with one flipped spin the
//! Hamiltonian acts as a hopping matrix `h_ij = J_ij` with zero diagonal,
//! while the fully polarized state `|↓…↓⟩` is annihilated (energy 0).
//!
//! The quench `U = e^{iπσ^y/4}` on the source site maps `|↓…↓⟩` to
//! `(|↓…↓⟩ ± |source⟩)/√2`. The vacuum branch stays put, the other branch
//! spreads as `Σ_r c_r(t)|r⟩` with `c(t) = e^{-iht} e_source`, and
//! `⟨σ^x_r⟩ = ±Re c_r(t)`. Without the quench `⟨σ^x_r⟩ = 0` since the
//! excitation number is conserved, hence `Q_r(t) = |Re c_r(t)| / 2`.
//! The dense oracle certifies this reduction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::{Boundary, CouplingModel, Exponent, Geometry};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct XyScenario {
    pub model: CouplingModel,
    pub quench_site: usize,
    pub times: Vec<f64>,
}

impl XyScenario {
    pub fn new(model: CouplingModel, quench_site: usize, times: Vec<f64>) -> Result<Self> {
        let sites = model.geometry.sites().ok_or(Error::InfiniteLattice)?;
        if quench_site >= sites {
            return Err(Error::SiteOutOfRange { site: quench_site as i64, len: sites });
        }
        check_times(&times)?;
        Ok(Self { model, quench_site, times })
    }

    pub fn sites(&self) -> usize {
        self.model.geometry.sites().expect("validated finite")
    }

    pub fn boundary(&self) -> Boundary {
        match self.model.geometry {
            Geometry::Finite { boundary, .. } => boundary,
            Geometry::Infinite => unreachable!("validated finite"),
        }
    }

    /// Distances that label distinct sites: up to `N/2` on a ring, up to
    /// the far end on an open chain.
    pub fn distances(&self) -> Vec<usize> {
        let n = self.sites();
        match self.boundary() {
            Boundary::Periodic => (1..=n / 2).collect(),
            Boundary::Open => (1..n - self.quench_site).collect(),
        }
    }

    /// Site a distance `r` to the right of the quench.
    pub fn site_at(&self, r: usize) -> Result<usize> {
        let n = self.sites();
        match self.boundary() {
            Boundary::Periodic => Ok((self.quench_site + r) % n),
            Boundary::Open if self.quench_site + r < n => Ok(self.quench_site + r),
            Boundary::Open => Err(Error::SiteOutOfRange { site: (self.quench_site + r) as i64, len: n }),
        }
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if let Some(&t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::InvalidTime(t));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::UnsortedTimes);
    }
    Ok(())
}

/// Single-excitation Hamiltonian: `h_ij = J_ij` off the diagonal, zero on it.
pub fn build_hopping_matrix(model: &CouplingModel) -> Result<DMatrix<f64>> {
    let n = model.geometry.sites().ok_or(Error::InfiniteLattice)?;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                h[(i, j)] = model.coupling(i as i64, j as i64)?;
            }
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagatorRow {
    pub amplitudes: Vec<Complex64>,
    pub sites: usize,
    pub t: f64,
}

impl PropagatorRow {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Eigendecomposition of the hopping matrix, reused for every time.
#[derive(Debug, Clone)]
pub struct Propagator {
    energies: DVector<f64>,
    modes: DMatrix<f64>,
}

impl Propagator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(matrix);
        Self { energies: eig.eigenvalues, modes: eig.eigenvectors }
    }

    pub fn sites(&self) -> usize {
        self.energies.len()
    }

    /// Column `source` of `exp(-i h t)`.
    pub fn evolve(&self, t: f64, source: usize) -> PropagatorRow {
        let n = self.sites();
        if t == 0.0 {
            let mut amplitudes = vec![Complex64::default(); n];
            amplitudes[source] = Complex64::new(1.0, 0.0);
            return PropagatorRow { amplitudes, sites: n, t };
        }
        let weights: Vec<Complex64> = (0..n)
            .map(|l| Complex64::from_polar(self.modes[(source, l)], -self.energies[l] * t))
            .collect();
        let amplitudes = (0..n)
            .into_par_iter()
            .map(|j| (0..n).map(|l| weights[l] * self.modes[(j, l)]).sum())
            .collect();
        PropagatorRow { amplitudes, sites: n, t }
    }
}

pub fn evolve_propagator(matrix: &DMatrix<f64>, t: f64, source: usize) -> Result<PropagatorRow> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidTime(t));
    }
    if source >= matrix.nrows() {
        return Err(Error::SiteOutOfRange { site: source as i64, len: matrix.nrows() });
    }
    Ok(Propagator::new(matrix.clone()).evolve(t, source))
}

/// `Q_r(t)` from the single-particle amplitude at the target site.
pub fn q_from_amplitude(c: Complex64) -> f64 {
    0.5 * c.re.abs()
}

/// `Q_r(t)` for every requested time at distance `r`.
pub fn qrt_xy(scenario: &XyScenario, r: usize) -> Result<Vec<f64>> {
    let site = scenario.site_at(r)?;
    let prop = Propagator::new(build_hopping_matrix(&scenario.model)?);
    Ok(scenario
        .times
        .iter()
        .map(|&t| q_from_amplitude(prop.evolve(t, scenario.quench_site).amplitudes[site]))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QPoint {
    pub t: f64,
    pub r: usize,
    pub q: f64,
}

/// `Q_r(t)` on all times and all distinct distances, one eigendecomposition.
pub fn qrt_xy_grid(scenario: &XyScenario) -> Result<Vec<QPoint>> {
    let prop = Propagator::new(build_hopping_matrix(&scenario.model)?);
    let distances = scenario.distances();
    let mut out = Vec::with_capacity(distances.len() * scenario.times.len());
    for &t in &scenario.times {
        let row = prop.evolve(t, scenario.quench_site);
        for &r in &distances {
            out.push(QPoint { t, r, q: q_from_amplitude(row.amplitudes[scenario.site_at(r)?]) });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DispersionGrid {
    /// The `N` momenta `2πm/N` of a periodic chain with minimal-image couplings.
    Lattice { sites: usize },
    /// `points` momenta uniformly covering `(0, π]`, with the infinite-chain
    /// band truncated after `terms` neighbors.
    Dense { points: usize, terms: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub momenta: Vec<f64>,
    pub energies: Vec<f64>,
    pub v_max: f64,
    pub k_at_max: f64,
    /// Spacing of the momentum grid; for `alpha <= 2` `v_max` depends on it.
    pub grid_scale: f64,
    /// Upper bound on the neglected band tail (dense grid only).
    pub tail_bound: f64,
    pub warning: Option<String>,
}

fn band(exponent: Exponent, grid: DispersionGrid) -> (Box<dyn Fn(f64) -> f64 + Sync>, f64) {
    match grid {
        DispersionGrid::Lattice { sites } => {
            // Signed minimal-image offsets keep E(k) smooth between lattice momenta.
            let js: Vec<(f64, f64)> = (1..sites)
                .map(|j| {
                    let off = if 2 * j <= sites { j as f64 } else { j as f64 - sites as f64 };
                    (off, exponent.decay(off.abs()))
                })
                .collect();
            (Box::new(move |k| js.iter().map(|&(off, c)| c * (k * off).cos()).sum()), 0.0)
        }
        DispersionGrid::Dense { terms, .. } => {
            let terms = match exponent {
                Exponent::Infinite => 1,
                Exponent::Finite(_) => terms,
            };
            let tail = match exponent {
                Exponent::Finite(a) => 2.0 * (terms as f64).powf(1.0 - a) / (a - 1.0),
                Exponent::Infinite => 0.0,
            };
            let js: Vec<f64> = (1..=terms).map(|d| 2.0 * exponent.decay(d as f64)).collect();
            (Box::new(move |k| js.iter().enumerate().map(|(idx, &c)| c * (k * (idx + 1) as f64).cos()).sum()), tail)
        }
    }
}

/// Band `E(k)` and the maximal group velocity `max |dE/dk|` over the grid,
/// with derivatives from Richardson-extrapolated centered differences.
pub fn dispersion_vmax(exponent: Exponent, grid: DispersionGrid) -> Result<DispersionReport> {
    let (momenta, grid_scale): (Vec<f64>, f64) = match grid {
        DispersionGrid::Lattice { sites } => {
            if sites < 3 {
                return Err(Error::PeriodicTooShort(sites));
            }
            let dk = 2.0 * std::f64::consts::PI / sites as f64;
            ((0..sites).map(|m| dk * m as f64).collect(), dk)
        }
        DispersionGrid::Dense { points, terms } => {
            if points == 0 || terms == 0 {
                return Err(Error::EmptyChain);
            }
            let dk = std::f64::consts::PI / points as f64;
            ((1..=points).map(|m| dk * m as f64).collect(), dk)
        }
    };
    let (energy, tail_bound) = band(exponent, grid);
    let h = 0.05 * grid_scale;
    let slope = |k: f64| {
        let d = |h: f64| (energy(k + h) - energy(k - h)) / (2.0 * h);
        (4.0 * d(0.5 * h) - d(h)) / 3.0
    };
    let energies: Vec<f64> = momenta.par_iter().map(|&k| energy(k)).collect();
    let (k_at_max, v_max) = momenta
        .par_iter()
        .map(|&k| (k, slope(k).abs()))
        .reduce(|| (0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let warning = match exponent {
        Exponent::Finite(a) if a <= 2.0 => Some(format!(
            "alpha = {a} <= 2: the group velocity diverges as k -> 0; v_max = {v_max} is set by the grid spacing {grid_scale}"
        )),
        _ => None,
    };
    Ok(DispersionReport { momenta, energies, v_max, k_at_max, grid_scale, tail_bound, warning })
}
