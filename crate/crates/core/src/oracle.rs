//! Brute-force reference: dense Hamiltonians from explicit Pauli tensor
//! products, full eigendecomposition, and the quench signal evaluated
//! literally as `|⟨ψ|U† A(t) U|ψ⟩ - ⟨ψ|A(t)|ψ⟩| / 2`.
//!
//! Nothing here is shared with the XY or TFIM simulators except the
//! coupling model. Basis: site `i` is bit `i`, bit set = spin up.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::couplings::CouplingModel;
use crate::error::{Error, Result};

pub const MAX_DENSE_SITES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    Xy,
    Tfim { b_z: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseModelSpec {
    pub kind: ModelKind,
    pub model: CouplingModel,
}

impl DenseModelSpec {
    pub fn new(kind: ModelKind, model: CouplingModel) -> Result<Self> {
        let sites = model.geometry.sites().ok_or(Error::InfiniteLattice)?;
        if sites > MAX_DENSE_SITES {
            return Err(Error::DenseBudget(sites));
        }
        Ok(Self { kind, model })
    }

    pub fn sites(&self) -> usize {
        self.model.geometry.sites().expect("validated finite")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-site matrix in the `(|↓⟩, |↑⟩)` basis.
pub fn pauli_matrix(p: Pauli) -> DMatrix<Complex64> {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    match p {
        Pauli::I => DMatrix::from_row_slice(2, 2, &[l, o, o, l]),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        // σ^y|↑⟩ = i|↓⟩, σ^y|↓⟩ = -i|↑⟩
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[o, i, -i, o]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[-l, o, o, l]),
    }
}

/// `e^{iπσ^y/4} = cos(π/4) I + i sin(π/4) σ^y`.
pub fn default_quench() -> DMatrix<Complex64> {
    let a = std::f64::consts::FRAC_PI_4;
    pauli_matrix(Pauli::I) * c(a.cos(), 0.0) + pauli_matrix(Pauli::Y) * c(0.0, a.sin())
}

/// `op_{N-1} ⊗ … ⊗ op_0` with the given single-site factors, identity elsewhere.
pub fn site_operator(sites: usize, factors: &[(usize, &DMatrix<Complex64>)]) -> DMatrix<Complex64> {
    let id = pauli_matrix(Pauli::I);
    let mut out = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for site in (0..sites).rev() {
        let f = factors.iter().find(|(s, _)| *s == site).map_or(&id, |(_, m)| *m);
        out = out.kronecker(f);
    }
    out
}

pub fn pauli_string(sites: usize, ops: &[(usize, Pauli)]) -> DMatrix<Complex64> {
    let mats: Vec<(usize, DMatrix<Complex64>)> = ops.iter().map(|&(s, p)| (s, pauli_matrix(p))).collect();
    let refs: Vec<(usize, &DMatrix<Complex64>)> = mats.iter().map(|(s, m)| (*s, m)).collect();
    site_operator(sites, &refs)
}

pub fn build_dense_hamiltonian(spec: &DenseModelSpec) -> Result<DMatrix<Complex64>> {
    let n = spec.sites();
    let dim = 1 << n;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in (i + 1)..n {
            let jij = spec.model.coupling(i as i64, j as i64)?;
            if jij == 0.0 {
                continue;
            }
            let xx = pauli_string(n, &[(i, Pauli::X), (j, Pauli::X)]);
            match spec.kind {
                ModelKind::Xy => {
                    let yy = pauli_string(n, &[(i, Pauli::Y), (j, Pauli::Y)]);
                    h += (xx + yy) * c(0.5 * jij, 0.0);
                }
                ModelKind::Tfim { .. } => h += xx * c(jij, 0.0),
            }
        }
    }
    if let ModelKind::Tfim { b_z } = spec.kind {
        for i in 0..n {
            h += pauli_string(n, &[(i, Pauli::Z)]) * c(b_z, 0.0);
        }
    }
    Ok(h)
}

/// Full eigendecomposition `H = V diag(E) V†`.
#[derive(Debug, Clone)]
pub struct DenseSolver {
    pub hamiltonian: DMatrix<Complex64>,
    pub energies: DVector<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl DenseSolver {
    pub fn new(hamiltonian: DMatrix<Complex64>) -> Self {
        let real = hamiltonian.iter().all(|z| z.im == 0.0);
        let (energies, vectors) = if real {
            let eig = SymmetricEigen::new(hamiltonian.map(|z| z.re));
            (eig.eigenvalues, eig.eigenvectors.map(|x| c(x, 0.0)))
        } else {
            let eig = SymmetricEigen::new(hamiltonian.clone());
            (eig.eigenvalues, eig.eigenvectors)
        };
        Self { hamiltonian, energies, vectors }
    }

    /// `max |H V - V diag(E)|`.
    pub fn residual(&self) -> f64 {
        let hv = &self.hamiltonian * &self.vectors;
        let mut worst: f64 = 0.0;
        for l in 0..self.energies.len() {
            for i in 0..self.vectors.nrows() {
                worst = worst.max((hv[(i, l)] - self.vectors[(i, l)] * self.energies[l]).norm());
            }
        }
        worst
    }

    pub fn evolve(&self, psi: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let mut coeff = self.vectors.ad_mul(psi);
        for (l, z) in coeff.iter_mut().enumerate() {
            *z *= Complex64::from_polar(1.0, -self.energies[l] * t);
        }
        &self.vectors * coeff
    }
}

pub fn expectation(op: &DMatrix<Complex64>, psi: &DVector<Complex64>) -> Complex64 {
    psi.dotc(&(op * psi))
}

/// `|↓…↓⟩`.
pub fn polarized_state(sites: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(1 << sites);
    v[0] = c(1.0, 0.0);
    v
}

/// A quench experiment: a single-site unitary and a single-site observable.
#[derive(Debug, Clone)]
pub struct QuenchSpec {
    pub unitary: DMatrix<Complex64>,
    pub quench_site: usize,
    pub observable: Pauli,
}

impl Default for QuenchSpec {
    fn default() -> Self {
        Self { unitary: default_quench(), quench_site: 0, observable: Pauli::X }
    }
}

/// Values indexed `[time][target]`.
pub type Table = Vec<Vec<f64>>;

/// Signal at `targets` (site indices) for every time, evaluated literally.
/// Returns `q[t_index][target_index]` and the unquenched expectations.
pub fn exact_signal(
    solver: &DenseSolver,
    sites: usize,
    quench: &QuenchSpec,
    targets: &[usize],
    times: &[f64],
) -> Result<(Table, Table)> {
    for &s in targets.iter().chain(std::iter::once(&quench.quench_site)) {
        if s >= sites {
            return Err(Error::SiteOutOfRange { site: s as i64, len: sites });
        }
    }
    let psi = polarized_state(sites);
    let u = site_operator(sites, &[(quench.quench_site, &quench.unitary)]);
    let psi_q = &u * &psi;
    let obs: Vec<DMatrix<Complex64>> = targets.iter().map(|&s| pauli_string(sites, &[(s, quench.observable)])).collect();
    let mut q = Vec::with_capacity(times.len());
    let mut plain = Vec::with_capacity(times.len());
    for &t in times {
        let a = solver.evolve(&psi, t);
        let b = solver.evolve(&psi_q, t);
        let mut row = Vec::with_capacity(targets.len());
        let mut base_row = Vec::with_capacity(targets.len());
        for op in &obs {
            let base = expectation(op, &a);
            let with = expectation(op, &b);
            row.push(0.5 * (with - base).norm());
            base_row.push(base.re);
        }
        q.push(row);
        plain.push(base_row);
    }
    Ok((q, plain))
}

/// `Q_r(t)` for the default experiment (quench on site 0, `A = σ^x_r`).
pub fn exact_qrt(spec: &DenseModelSpec, r: usize, times: &[f64]) -> Result<Vec<f64>> {
    let q = exact_qrt_sites(spec, &[r], times)?;
    Ok(q.into_iter().map(|row| row[0]).collect())
}

/// As [`exact_qrt`] for several target sites with a single diagonalization;
/// indexed `[time][target]`.
pub fn exact_qrt_sites(spec: &DenseModelSpec, targets: &[usize], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let solver = DenseSolver::new(build_dense_hamiltonian(spec)?);
    Ok(exact_signal(&solver, spec.sites(), &QuenchSpec::default(), targets, times)?.0)
}

/// Writes a state as little-endian `(re, im)` f64 pairs in basis order.
pub fn write_state_dump<W: Write>(mut w: W, state: &[Complex64]) -> Result<()> {
    for z in state {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_state_dump<R: Read>(mut r: R) -> Result<Vec<Complex64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % 16 != 0 {
        return Err(Error::Io(format!("dump length {} is not a multiple of 16", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|b| {
            let re = f64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(b[8..].try_into().expect("8 bytes"));
            c(re, im)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{Boundary, Exponent};

    fn spec(kind: ModelKind, n: usize, a: Exponent) -> DenseModelSpec {
        DenseModelSpec::new(kind, CouplingModel::chain(a, n, Boundary::Open).unwrap()).unwrap()
    }

    #[test]
    fn two_site_xy_block() {
        let h = build_dense_hamiltonian(&spec(ModelKind::Xy, 2, Exponent::Finite(3.0))).unwrap();
        for (i, j) in (0..4).flat_map(|i| (0..4).map(move |j| (i, j))) {
            let expect = if (i, j) == (1, 2) || (i, j) == (2, 1) { 1.0 } else { 0.0 };
            assert_eq!(h[(i, j)], c(expect, 0.0), "({i},{j})");
        }
    }

    #[test]
    fn hermitian_and_xy_conserves_magnetization() {
        let h = build_dense_hamiltonian(&spec(ModelKind::Xy, 6, Exponent::Finite(2.0))).unwrap();
        assert!((&h - h.adjoint()).iter().all(|z| z.norm() < 1e-14));
        let mut sz = DMatrix::zeros(64, 64);
        for i in 0..6 {
            sz += pauli_string(6, &[(i, Pauli::Z)]);
        }
        let comm = &h * &sz - &sz * &h;
        assert!(comm.iter().all(|z| z.norm() < 1e-12));
        let t = build_dense_hamiltonian(&spec(ModelKind::Tfim { b_z: 0.5 }, 5, Exponent::Finite(2.0))).unwrap();
        assert!((&t - t.adjoint()).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn budget_enforced() {
        let m = CouplingModel::chain(Exponent::Finite(3.0), 13, Boundary::Open).unwrap();
        assert_eq!(DenseModelSpec::new(ModelKind::Xy, m), Err(Error::DenseBudget(13)));
    }

    #[test]
    fn quench_is_the_expected_rotation() {
        let u = default_quench();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // columns: images of |↓⟩ and |↑⟩
        assert!((u[(0, 0)] - c(h, 0.0)).norm() < 1e-15);
        assert!((u[(1, 0)] - c(h, 0.0)).norm() < 1e-15);
        assert!((u[(0, 1)] - c(-h, 0.0)).norm() < 1e-15);
        assert!((u[(1, 1)] - c(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eigen_residual_small() {
        let s = DenseSolver::new(build_dense_hamiltonian(&spec(ModelKind::Tfim { b_z: 0.5 }, 7, Exponent::Finite(3.0))).unwrap());
        assert!(s.residual() < 1e-10);
    }

    #[test]
    fn zero_time_zero_signal() {
        let q = exact_qrt(&spec(ModelKind::Xy, 5, Exponent::Finite(3.0)), 2, &[0.0]).unwrap();
        assert!(q[0].abs() < 1e-15);
    }

    #[test]
    fn global_phase_of_quench_irrelevant() {
        let sp = spec(ModelKind::Tfim { b_z: 0.5 }, 6, Exponent::Finite(2.0));
        let solver = DenseSolver::new(build_dense_hamiltonian(&sp).unwrap());
        let times = [0.4, 1.1];
        let (a, _) = exact_signal(&solver, 6, &QuenchSpec::default(), &[1, 2, 5], &times).unwrap();
        let phased = QuenchSpec { unitary: default_quench() * Complex64::from_polar(1.0, 0.83), ..QuenchSpec::default() };
        let (b, _) = exact_signal(&solver, 6, &phased, &[1, 2, 5], &times).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn pure_ising_signal_closed_form() {
        // With B_z = 0 every term commutes with σ^x_r, so the σ^x signal
        // vanishes; the σ^y signal dephases as a product of cosines.
        let n = 10;
        let sp = spec(ModelKind::Tfim { b_z: 0.0 }, n, Exponent::Finite(1.5));
        let solver = DenseSolver::new(build_dense_hamiltonian(&sp).unwrap());
        let times = [0.3, 0.9, 2.2];
        let targets: Vec<usize> = (1..n).collect();
        let (qx, _) = exact_signal(&solver, n, &QuenchSpec::default(), &targets, &times).unwrap();
        assert!(qx.iter().flatten().all(|q| q.abs() < 1e-10));

        let y = QuenchSpec { observable: Pauli::Y, ..QuenchSpec::default() };
        let (qy, _) = exact_signal(&solver, n, &y, &targets, &times).unwrap();
        let j = |a: usize, b: usize| sp.model.coupling(a as i64, b as i64).unwrap();
        for (ti, &t) in times.iter().enumerate() {
            for (ri, &r) in targets.iter().enumerate() {
                let mut expect = (2.0 * t * j(0, r)).sin().abs();
                for k in (1..n).filter(|&k| k != r) {
                    expect *= (2.0 * t * j(r, k)).cos().abs();
                }
                expect *= 0.5;
                assert!((qy[ti][ri] - expect).abs() < 1e-10, "t={t} r={r}: {} vs {expect}", qy[ti][ri]);
            }
        }
    }

    #[test]
    fn state_dump_round_trip() {
        let state: Vec<Complex64> = (0..8).map(|k| c(k as f64 * 0.5, -(k as f64))).collect();
        let mut buf = Vec::new();
        write_state_dump(&mut buf, &state).unwrap();
        assert_eq!(buf.len(), 128);
        assert_eq!(&buf[16..24], &0.5f64.to_le_bytes());
        assert_eq!(read_state_dump(&buf[..]).unwrap(), state);
        assert!(read_state_dump(&buf[..15]).is_err());
    }
}
