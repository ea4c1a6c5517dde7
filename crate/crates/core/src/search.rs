//! Scalar minimization and root bracketing used by the bound optimizers.

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmin, min)` once the bracket is narrower than `tol`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]` with `f(lo) < 0 <= f(hi)`.
/// Stops when `hi - lo <= abs_tol + rel_tol * |hi|`; returns the upper end,
/// which always satisfies `f >= 0`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    for _ in 0..2000 {
        if hi - lo <= abs_tol + rel_tol * hi.abs() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx < 1e-16);
    }

    #[test]
    fn golden_handles_minimum_at_edge() {
        let (x, _) = golden_section(|x| -x, 0.0, 2.0, 1e-8);
        assert!((x - 2.0).abs() < 1e-7);
    }

    #[test]
    fn bisect_finds_sqrt_two() {
        let x = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 0.0);
        assert!((x - 2f64.sqrt()).abs() < 1e-13);
        assert!(x * x - 2.0 >= 0.0);
    }
}
