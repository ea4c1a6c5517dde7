use lightcone_core::couplings::{Boundary, CouplingModel, Exponent};
use lightcone_core::krylov::KrylovConfig;
use lightcone_core::oracle::{
    build_dense_hamiltonian, exact_qrt_sites, exact_signal, DenseModelSpec, DenseSolver, ModelKind, Pauli,
    QuenchSpec,
};
use lightcone_core::tfim::{apply_hamiltonian, qrt_tfim, TfimScenario};
use lightcone_core::xy::{build_hopping_matrix, qrt_xy_grid, Propagator, XyScenario};
use nalgebra::DVector;
use num_complex::Complex64;

fn pseudo_random(dim: usize, mut x: u64) -> Vec<Complex64> {
    let mut next = || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    (0..dim).map(|_| Complex64::new(next(), next())).collect()
}

#[test]
fn xy_matches_dense_at_eight_sites() {
    let times = vec![0.5, 1.0, 2.0];
    let model = CouplingModel::chain(Exponent::Finite(3.0), 8, Boundary::Periodic).unwrap();
    let s = XyScenario::new(model, 0, times.clone()).unwrap();
    let grid = qrt_xy_grid(&s).unwrap();
    let rs = s.distances();
    let exact = exact_qrt_sites(&DenseModelSpec::new(ModelKind::Xy, model).unwrap(), &rs, &times).unwrap();
    for p in &grid {
        let ti = times.iter().position(|&t| t == p.t).unwrap();
        let ri = rs.iter().position(|&r| r == p.r).unwrap();
        assert!((p.q - exact[ti][ri]).abs() < 1e-10, "{p:?} vs {}", exact[ti][ri]);
    }
}

#[test]
fn xy_sigma_y_signal_is_imaginary_part() {
    let times = [0.3, 1.1, 2.5];
    let model = CouplingModel::chain(Exponent::Finite(2.0), 7, Boundary::Open).unwrap();
    let solver = DenseSolver::new(build_dense_hamiltonian(&DenseModelSpec::new(ModelKind::Xy, model).unwrap()).unwrap());
    let quench = QuenchSpec { observable: Pauli::Y, ..QuenchSpec::default() };
    let targets: Vec<usize> = (1..7).collect();
    let (q, plain) = exact_signal(&solver, 7, &quench, &targets, &times).unwrap();
    let prop = Propagator::new(build_hopping_matrix(&model).unwrap());
    for (ti, &t) in times.iter().enumerate() {
        let row = prop.evolve(t, 0);
        for (k, &site) in targets.iter().enumerate() {
            assert!((q[ti][k] - 0.5 * row.amplitudes[site].im.abs()).abs() < 1e-10);
            assert!(plain[ti][k].abs() < 1e-12);
        }
    }
}

#[test]
fn dense_single_excitation_block_is_hopping_matrix() {
    for b in [Boundary::Open, Boundary::Periodic] {
        let model = CouplingModel::chain(Exponent::Finite(1.5), 6, b).unwrap();
        let h = build_dense_hamiltonian(&DenseModelSpec::new(ModelKind::Xy, model).unwrap()).unwrap();
        let hop = build_hopping_matrix(&model).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let z = h[(1 << i, 1 << j)];
                assert!((z.re - hop[(i, j)]).abs() < 1e-12 && z.im.abs() < 1e-12);
            }
        }
        assert!(h.column(0).iter().all(|z| z.norm() < 1e-12));
    }
}

#[test]
fn tfim_apply_matches_dense_matrix() {
    let model = CouplingModel::chain(Exponent::Finite(2.5), 8, Boundary::Periodic).unwrap();
    let s = TfimScenario::new(model, 0.7, 0, vec![]).unwrap();
    let h = build_dense_hamiltonian(&DenseModelSpec::new(ModelKind::Tfim { b_z: 0.7 }, model).unwrap()).unwrap();
    let v = pseudo_random(256, 99);
    let got = apply_hamiltonian(&v, &s).unwrap();
    let expect = &h * DVector::from_vec(v);
    for (a, b) in got.iter().zip(expect.iter()) {
        assert!((a - b).norm() < 1e-12);
    }
}

fn tfim_vs_dense(exponent: Exponent, times: &[f64]) -> f64 {
    let model = CouplingModel::chain(exponent, 10, Boundary::Open).unwrap();
    let s = TfimScenario::new(model, 0.5, 0, times.to_vec()).unwrap();
    let res = qrt_tfim(&s, &KrylovConfig::default()).unwrap();
    let rs = s.distances();
    let exact =
        exact_qrt_sites(&DenseModelSpec::new(ModelKind::Tfim { b_z: 0.5 }, model).unwrap(), &rs, times).unwrap();
    res.points
        .iter()
        .map(|p| {
            let ti = times.iter().position(|&t| t == p.t).unwrap();
            let ri = rs.iter().position(|&r| r == p.r).unwrap();
            (p.q - exact[ti][ri]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn tfim_matches_dense_at_ten_sites() {
    assert!(tfim_vs_dense(Exponent::Finite(6.0), &[1.0]) < 1e-8);
}

#[test]
fn tfim_nearest_neighbor_limit_matches_dense() {
    assert!(tfim_vs_dense(Exponent::Infinite, &[0.5, 1.0]) < 1e-8);
}
