//! Small numerical kernels: quadrature, bracketing root search, golden
//! section, and the tridiagonal (Thomas) solver.

use crate::error::{Error, Result};

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::numeric("adaptive quadrature did not converge"));
        }
        Ok(step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }

    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Bisection on a bracket `[lo, hi]` where `pred(lo)` holds and `pred(hi)`
/// fails; returns the last point where `pred` holds, within `abs_tol` or
/// relative `rel_tol` of the boundary.
pub fn bisect_boundary<P: Fn(f64) -> bool>(
    pred: P,
    mut lo: f64,
    mut hi: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    for _ in 0..2000 {
        if hi - lo <= abs_tol.max(rel_tol * hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Golden-section minimisation of a unimodal `f` on `[a, b]`.
/// Returns `(argmin, min)` once the bracket is below `rel_tol` relative width.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Solves a tridiagonal system with sub-diagonal `lower` (`lower[0]` unused),
/// diagonal `diag`, super-diagonal `upper` (last entry unused).
///
/// Returns `None` when a pivot is not strictly positive; for the
/// Z-matrices used here that is exactly the failure of the M-matrix
/// property.
pub fn thomas_positive(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    if n == 0 {
        return Some(Vec::new());
    }
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut pivot = diag[0];
    if !(pivot > 0.0) {
        return None;
    }
    cp[0] = upper[0] / pivot;
    dp[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * cp[i - 1];
        if !(pivot > 0.0) {
            return None;
        }
        cp[i] = upper[i] / pivot;
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / pivot;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_gaussian() {
        let v = adaptive_simpson(&|x: f64| (-x * x).exp(), 0.0, 10.0, 1e-12).unwrap();
        assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-10);
    }

    #[test]
    fn bisect_sqrt2() {
        let r = bisect_boundary(|x| x * x <= 2.0, 0.0, 2.0, 1e-14, 0.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(r * r <= 2.0);
    }

    #[test]
    fn golden_parabola() {
        let (x, fx) = golden_section(|x| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thomas_matches_dense() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = [1, 0, 1]  =>  x = [1, 1, 1]
        let x = thomas_positive(&[0.0, -1.0, -1.0], &[2.0; 3], &[-1.0, -1.0, 0.0], &[1.0, 0.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn thomas_flags_non_m_matrix() {
        assert!(thomas_positive(&[0.0, -2.0], &[1.0, 1.0], &[-2.0, 0.0], &[1.0, 1.0]).is_none());
    }
}
