//! n-th order hopping sums `J_n(i,j) = (M^n)_ij` of the coupling matrix `M`
//! (unit diagonal included) and the analytic bounds on them.
//!
//! Exact sums are only available on finite chains. Cutting the infinite
//! lattice down to a window drops non-negative terms, so a finite-window
//! value never exceeds the infinite-lattice one and a bound that holds for
//! the latter is still a valid (falsifiable) test on the former.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::{Boundary, CouplingModel, Exponent, LambdaMode};
use crate::error::{Error, Result};

/// Couplings by distance `0..sites` (periodic chains fold to the minimal image).
fn distance_table(model: &CouplingModel) -> Result<(usize, Boundary, Vec<f64>)> {
    match model.geometry {
        crate::couplings::Geometry::Infinite => Err(Error::InfiniteLattice),
        crate::couplings::Geometry::Finite { sites, boundary } => {
            let table = (0..sites as u64)
                .map(|d| {
                    let d = if boundary == Boundary::Periodic { d.min(sites as u64 - d) } else { d };
                    model.coupling_at(d)
                })
                .collect();
            Ok((sites, boundary, table))
        }
    }
}

fn apply_coupling(table: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|a| v.iter().enumerate().map(|(b, &x)| table[a.abs_diff(b)] * x).sum())
        .collect()
}

/// Rows `J_1(i, ·), …, J_maxn(i, ·)` by repeated matrix-vector products seeded at `i`.
pub fn jn_rows(model: &CouplingModel, i: usize, max_n: usize) -> Result<Vec<Vec<f64>>> {
    if max_n == 0 {
        return Err(Error::ZeroOrder);
    }
    let (sites, _, table) = distance_table(model)?;
    if i >= sites {
        return Err(Error::SiteOutOfRange { site: i as i64, len: sites });
    }
    let mut v = vec![0.0; sites];
    v[i] = 1.0;
    let mut rows = Vec::with_capacity(max_n);
    for _ in 0..max_n {
        v = apply_coupling(&table, &v);
        rows.push(v.clone());
    }
    Ok(rows)
}

/// `J_n(i, j)` on a finite chain in `O(n N^2)`.
pub fn exact_jn(model: &CouplingModel, i: usize, j: usize, n: usize) -> Result<f64> {
    let sites = model.geometry.sites().ok_or(Error::InfiniteLattice)?;
    if j >= sites {
        return Err(Error::SiteOutOfRange { site: j as i64, len: sites });
    }
    Ok(jn_rows(model, i, n)?[n - 1][j])
}

/// Default window: at least `4 (r + n)` sites, odd, with the pair centered.
pub fn window_sites(r: u64, n: usize) -> usize {
    let w = 4 * (r as usize + n);
    w | 1
}

/// Infinite-lattice `J_n` at distance `r`, estimated on a centered open
/// window that is doubled until the value changes by less than 1%.
/// Returns `(value, window)`.
pub fn windowed_jn(exponent: Exponent, r: u64, n: usize) -> Result<(f64, usize)> {
    let eval = |sites: usize| -> Result<f64> {
        let model = CouplingModel::chain(exponent, sites, Boundary::Open)?;
        let i = (sites - r as usize) / 2;
        exact_jn(&model, i, i + r as usize, n)
    };
    let mut sites = window_sites(r, n);
    let mut prev = eval(sites)?;
    for _ in 0..6 {
        let next_sites = 2 * sites + 1;
        let next = eval(next_sites)?;
        let converged = (next - prev).abs() <= 0.01 * next.abs();
        prev = next;
        sites = next_sites;
        if converged {
            break;
        }
    }
    Ok((prev, sites))
}

/// `(2 λ 2^alpha)^(n-1) r^-alpha`, from iterating the Hastings-Koma
/// reproducibility condition.
pub fn hk_jn_bound(n: usize, r: u64, lambda: f64, exponent: Exponent) -> Result<f64> {
    let alpha = exponent.value().ok_or(Error::InfiniteExponent)?;
    if n == 0 {
        return Err(Error::ZeroOrder);
    }
    if r == 0 {
        return Err(Error::ZeroDistance);
    }
    let base = 2.0 * lambda * 2f64.powf(alpha);
    Ok(base.powi(n as i32 - 1) * (r as f64).powf(-alpha))
}

/// `(12 λ)^(n-1) (r-n+1)^-alpha`, valid for `n <= r`.
pub fn new_jn_bound(n: usize, r: u64, lambda: f64, exponent: Exponent) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroOrder);
    }
    if r == 0 {
        return Err(Error::ZeroDistance);
    }
    if n as u64 > r {
        return Err(Error::OrderExceedsDistance { n, r });
    }
    let remaining = (r - n as u64 + 1) as f64;
    Ok((12.0 * lambda).powi(n as i32 - 1) * exponent.decay(remaining))
}

/// `λ^(n-1)`.
pub fn trivial_jn_bound(n: usize, lambda: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroOrder);
    }
    Ok(lambda.powi(n as i32 - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    /// `Σ_k J_ik J_kj <= 2 λ 2^alpha J_ij`
    HkReproducibility,
    /// `Σ_k J_ik J_kj <= 4 λ Σ_{r_ik <= 1} J_ik J_kj`
    NearestNeighborReproducibility,
    /// `J_n <= (2 λ 2^alpha)^(n-1) r^-alpha`
    HkJnBound,
    /// `J_n <= (12 λ)^(n-1) (r-n+1)^-alpha`
    NewJnBound,
    /// `J_n <= λ^(n-1)`
    TrivialJnBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub inequality: Inequality,
    pub i: usize,
    pub j: usize,
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
}

impl InequalityCheck {
    fn new(inequality: Inequality, i: usize, j: usize, n: usize, lhs: f64, rhs: f64) -> Self {
        // Relative slack for round-off when both sides coincide.
        let pass = lhs <= rhs * (1.0 + 1e-12);
        let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
        Self { inequality, i, j, n, lhs, rhs, ratio, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub exponent: Exponent,
    pub sites: usize,
    pub lambda: f64,
    pub checks: Vec<InequalityCheck>,
}

impl InequalityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn max_ratio(&self, which: Inequality) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.inequality == which)
            .map(|c| c.ratio)
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

fn pairs_within(sites: usize, max_r: u64) -> Vec<(usize, usize)> {
    (0..sites)
        .flat_map(|i| ((i + 1)..sites.min(i + max_r as usize + 1)).map(move |j| (i, j)))
        .collect()
}

/// Evaluates both sides of the two second-order reproducibility conditions
/// for every pair `i < j` with `1 <= r_ij <= max_r`, using the
/// infinite-lattice λ. The Hastings-Koma form is skipped for `alpha = inf`.
pub fn verify_reproducibility(model: &CouplingModel, max_r: u64) -> Result<InequalityReport> {
    let (sites, boundary, table) = distance_table(model)?;
    let lambda = model.lambda(LambdaMode::InfiniteLattice)?.value;
    let hk_factor = model.exponent.value().map(|a| 2.0 * lambda * 2f64.powf(a));
    let dist = |a: usize, b: usize| {
        let d = a.abs_diff(b);
        if boundary == Boundary::Periodic { d.min(sites - d) } else { d }
    };
    let checks = pairs_within(sites, max_r)
        .into_par_iter()
        .flat_map_iter(|(i, j)| {
            let r = dist(i, j);
            let lhs: f64 = (0..sites).map(|k| table[dist(i, k)] * table[dist(k, j)]).sum();
            let near: f64 = (0..sites)
                .filter(|&k| dist(i, k) <= 1)
                .map(|k| table[dist(i, k)] * table[dist(k, j)])
                .sum();
            let mut out = Vec::with_capacity(2);
            if let Some(f) = hk_factor {
                out.push(InequalityCheck::new(Inequality::HkReproducibility, i, j, 2, lhs, f * table[r]));
            }
            out.push(InequalityCheck::new(
                Inequality::NearestNeighborReproducibility,
                i,
                j,
                2,
                lhs,
                4.0 * lambda * near,
            ));
            out.into_iter()
        })
        .collect();
    Ok(InequalityReport { exponent: model.exponent, sites, lambda, checks })
}

/// Compares exact `J_n` against the three closed-form bounds for all pairs
/// with `1 <= r <= max_r` and `1 <= n <= max_n` (the `(12λ)` bound only for
/// `n <= r`, the Hastings-Koma bound only for finite alpha).
pub fn verify_jn_bounds(model: &CouplingModel, max_n: usize, max_r: u64) -> Result<InequalityReport> {
    let (sites, boundary, _) = distance_table(model)?;
    let lambda = model.lambda(LambdaMode::InfiniteLattice)?.value;
    let exponent = model.exponent;
    let rows_per_site: Vec<(usize, Vec<Vec<f64>>)> = (0..sites)
        .into_par_iter()
        .map(|i| jn_rows(model, i, max_n).map(|rows| (i, rows)))
        .collect::<Result<_>>()?;
    let mut checks = Vec::new();
    for (i, rows) in &rows_per_site {
        let i = *i;
        for j in (i + 1)..sites.min(i + max_r as usize + 1) {
            let d = j - i;
            let r = if boundary == Boundary::Periodic { d.min(sites - d) } else { d } as u64;
            for (idx, row) in rows.iter().enumerate() {
                let n = idx + 1;
                let exact = row[j];
                if exponent.value().is_some() {
                    checks.push(InequalityCheck::new(
                        Inequality::HkJnBound,
                        i,
                        j,
                        n,
                        exact,
                        hk_jn_bound(n, r, lambda, exponent)?,
                    ));
                }
                if n as u64 <= r {
                    checks.push(InequalityCheck::new(
                        Inequality::NewJnBound,
                        i,
                        j,
                        n,
                        exact,
                        new_jn_bound(n, r, lambda, exponent)?,
                    ));
                }
                checks.push(InequalityCheck::new(Inequality::TrivialJnBound, i, j, n, exact, trivial_jn_bound(n, lambda)?));
            }
        }
    }
    Ok(InequalityReport { exponent, sites, lambda, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::infinite_lattice_lambda;
    use proptest::prelude::*;

    fn open(n: usize, a: Exponent) -> CouplingModel {
        CouplingModel::chain(a, n, Boundary::Open).unwrap()
    }

    /// Brute-force nested sums over intermediate sites.
    fn brute_j3(model: &CouplingModel, i: usize, j: usize) -> f64 {
        let n = model.geometry.sites().unwrap() as i64;
        let c = |a: i64, b: i64| model.coupling(a, b).unwrap();
        let mut s = 0.0;
        for k1 in 0..n {
            for k2 in 0..n {
                s += c(i as i64, k1) * c(k1, k2) * c(k2, j as i64);
            }
        }
        s
    }

    #[test]
    fn first_order_is_the_coupling() {
        let m = open(30, Exponent::Finite(2.5));
        for j in 1..30 {
            assert_eq!(exact_jn(&m, 0, j, 1).unwrap(), (j as f64).powf(-2.5));
        }
    }

    #[test]
    fn three_site_second_order() {
        let m = open(3, Exponent::Finite(2.0));
        assert_eq!(exact_jn(&m, 0, 2, 2).unwrap(), 1.5);
    }

    #[test]
    fn third_order_matches_brute_force() {
        let m = open(51, Exponent::Finite(3.0));
        let fast = exact_jn(&m, 0, 5, 3).unwrap();
        let slow = brute_j3(&m, 0, 5);
        assert!((fast - slow).abs() <= 1e-12 * slow);
        let p = CouplingModel::chain(Exponent::Finite(2.0), 17, Boundary::Periodic).unwrap();
        let fast = exact_jn(&p, 3, 12, 3).unwrap();
        let slow = brute_j3(&p, 3, 12);
        assert!((fast - slow).abs() <= 1e-12 * slow);
    }

    #[test]
    fn exact_jn_rejects_infinite_geometry_and_zero_order() {
        let m = CouplingModel::infinite(Exponent::Finite(2.0));
        assert_eq!(exact_jn(&m, 0, 1, 1), Err(Error::InfiniteLattice));
        assert_eq!(exact_jn(&open(5, Exponent::Finite(2.0)), 0, 1, 0), Err(Error::ZeroOrder));
    }

    #[test]
    fn hk_bound_values() {
        let l2 = infinite_lattice_lambda(Exponent::Finite(2.0));
        assert_eq!(hk_jn_bound(1, 7, l2, Exponent::Finite(2.0)).unwrap(), 1.0 / 49.0);
        // (2 * 4.289868 * 4) / 16
        let b = hk_jn_bound(2, 4, l2, Exponent::Finite(2.0)).unwrap();
        assert!((b - 2.0 * l2 * 4.0 / 16.0).abs() < 1e-14);
        assert!((b - 2.1449).abs() < 1e-4);
        assert_eq!(hk_jn_bound(2, 4, 3.0, Exponent::Infinite), Err(Error::InfiniteExponent));

        let l3 = infinite_lattice_lambda(Exponent::Finite(3.0));
        let m = open(401, Exponent::Finite(3.0));
        let exact = exact_jn(&m, 199, 201, 2).unwrap();
        assert!(exact <= hk_jn_bound(2, 2, l3, Exponent::Finite(3.0)).unwrap());
    }

    #[test]
    fn new_bound_values() {
        let l3 = infinite_lattice_lambda(Exponent::Finite(3.0));
        assert_eq!(new_jn_bound(1, 9, l3, Exponent::Finite(3.0)).unwrap(), 9f64.powf(-3.0));
        let b = new_jn_bound(3, 10, l3, Exponent::Finite(3.0)).unwrap();
        assert!((b - (12.0 * l3).powi(2) / 512.0).abs() < 1e-12 * b);
        let m = open(201, Exponent::Finite(3.0));
        assert!(exact_jn(&m, 95, 105, 3).unwrap() <= b);
        assert_eq!(new_jn_bound(6, 6, 2.0, Exponent::Finite(4.0)).unwrap(), 24f64.powi(5));
        assert_eq!(new_jn_bound(3, 3, 3.0, Exponent::Infinite).unwrap(), 36f64.powi(2));
        assert_eq!(new_jn_bound(2, 3, 3.0, Exponent::Infinite).unwrap(), 0.0);
        assert_eq!(
            new_jn_bound(5, 4, 3.0, Exponent::Finite(2.0)),
            Err(Error::OrderExceedsDistance { n: 5, r: 4 })
        );
    }

    #[test]
    fn trivial_bound_values() {
        assert_eq!(trivial_jn_bound(1, 7.0).unwrap(), 1.0);
        assert_eq!(trivial_jn_bound(4, 3.0).unwrap(), 27.0);
        let l2 = infinite_lattice_lambda(Exponent::Finite(2.0));
        let m = open(101, Exponent::Finite(2.0));
        let rows = jn_rows(&m, 50, 5).unwrap();
        assert!(rows[4].iter().all(|&x| x <= l2.powi(4)));
    }

    #[test]
    fn reproducibility_holds_alpha_three() {
        let m = open(401, Exponent::Finite(3.0));
        let rep = verify_reproducibility(&m, 50).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.first_failure());
        assert!(rep.checks.iter().any(|c| c.inequality == Inequality::HkReproducibility));
    }

    #[test]
    fn reproducibility_nearest_neighbor_form_alpha_two_unit_distance() {
        let m = open(401, Exponent::Finite(2.0));
        let l = infinite_lattice_lambda(Exponent::Finite(2.0));
        let (i, j) = (200i64, 201i64);
        let c = |a: i64, b: i64| m.coupling(a, b).unwrap();
        let lhs: f64 = (0..401).map(|k| c(i, k) * c(k, j)).sum();
        let rhs = 4.0 * l * (c(i, i) * c(i, j) + c(i, i - 1) * c(i - 1, j) + c(i, i + 1) * c(i + 1, j));
        assert!(lhs <= rhs);
    }

    #[test]
    fn reproducibility_nearest_neighbor_limit() {
        let m = open(101, Exponent::Infinite);
        let rep = verify_reproducibility(&m, 10).unwrap();
        assert_eq!(rep.lambda, 3.0);
        assert!(rep.all_pass());
        assert!(rep.checks.iter().all(|c| c.inequality == Inequality::NearestNeighborReproducibility));
    }

    #[test]
    fn report_serializes_per_pair_fields() {
        let m = open(9, Exponent::Finite(3.0));
        let json = verify_reproducibility(&m, 2).unwrap().to_json();
        let first = &json["checks"][0];
        for key in ["i", "j", "n", "lhs", "rhs", "ratio", "pass", "inequality"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn windowed_value_converges() {
        let (v, sites) = windowed_jn(Exponent::Finite(3.0), 5, 2).unwrap();
        assert!(sites >= window_sites(5, 2));
        let m = open(sites, Exponent::Finite(3.0));
        let i = (sites - 5) / 2;
        assert_eq!(v, exact_jn(&m, i, i + 5, 2).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn chapman_kolmogorov(alpha in 1.2f64..8.0, m in 1usize..4, n in 1usize..4, i in 0usize..25, j in 0usize..25) {
            let model = open(25, Exponent::Finite(alpha));
            let rows_i = jn_rows(&model, i, m + n).unwrap();
            let lhs = rows_i[m + n - 1][j];
            let rhs: f64 = (0..25).map(|k| rows_i[m - 1][k] * exact_jn(&model, k, j, n).unwrap()).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-300));
        }

        #[test]
        fn symmetric_in_endpoints(alpha in 1.2f64..8.0, n in 1usize..5, i in 0usize..20, j in 0usize..20, periodic in any::<bool>()) {
            let b = if periodic { Boundary::Periodic } else { Boundary::Open };
            let model = CouplingModel::chain(Exponent::Finite(alpha), 20, b).unwrap();
            let a = exact_jn(&model, i, j, n).unwrap();
            let c = exact_jn(&model, j, i, n).unwrap();
            prop_assert!((a - c).abs() <= 1e-12 * a.max(c));
        }

        #[test]
        fn exact_dominated_by_all_bounds(alpha in 1.1f64..10.0, n in 1usize..6, r in 1u64..25) {
            let e = Exponent::Finite(alpha);
            let lambda = infinite_lattice_lambda(e);
            let model = open(121, e);
            let exact = exact_jn(&model, 48, 48 + r as usize, n).unwrap();
            prop_assert!(exact <= hk_jn_bound(n, r, lambda, e).unwrap() * (1.0 + 1e-12));
            prop_assert!(exact <= trivial_jn_bound(n, lambda).unwrap() * (1.0 + 1e-12));
            if n as u64 <= r {
                prop_assert!(exact <= new_jn_bound(n, r, lambda, e).unwrap() * (1.0 + 1e-12));
            }
            let row_max = model.lambda(LambdaMode::FiniteRowMax).unwrap().value;
            prop_assert!(exact <= row_max.powi(n as i32));
        }
    }
}
