//! Exact transient law of `X` on a finite window by uniformization.
//!
//! The window `[lo, hi]` is made absorbing at both ends. Paths that reach an
//! end before `t` are the only ones whose contribution may be wrong, so the
//! probability of that event (the leak) bounds the truncation error:
//! `P_0(H(lo) < ∞)` on the left, and on the right a Chernoff bound on the
//! sum of the first holding times at `0, ..., hi-1`, all of which precede
//! `H(hi)`.
//!
//! A site with a tiny holding mean makes the uniformization rate `Λ` huge.
//! Past [`SERIES_RATE_TIME`] the Poisson series is replaced by squaring the
//! uniformized kernel in double-double arithmetic; every quantity stays
//! nonnegative, so rounding grows at most linearly in the number of
//! factors.

use statrs::function::gamma::ln_gamma;
use twofloat::TwoFloat;

use super::hitting::backtrack_probs;
use crate::environment::Environment;
use crate::error::{Error, Result};

/// Largest `Λt` handled by the Poisson series.
pub const SERIES_RATE_TIME: f64 = 1e6;

/// Unit roundoff of double-double arithmetic.
const DD_EPS: f64 = 1.0 / (1u128 << 104) as f64;

/// Distribution of `X_t` on `[lo, hi]`; the end cells hold absorbed mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Transient {
    pub lo: i64,
    pub probs: Vec<f64>,
    /// Poisson mass not included in the series.
    pub series_error: f64,
}

impl Transient {
    pub fn hi(&self) -> i64 {
        self.lo + self.probs.len() as i64 - 1
    }

    pub fn prob(&self, x: i64) -> f64 {
        if x < self.lo || x > self.hi() {
            0.0
        } else {
            self.probs[(x - self.lo) as usize]
        }
    }

    /// `P(X_t < threshold)`.
    pub fn below(&self, threshold: i64) -> f64 {
        (self.lo..threshold.min(self.hi() + 1)).map(|x| self.prob(x)).sum()
    }

    /// Mass on the interior `(lo, hi)`.
    pub fn interior(&self) -> f64 {
        self.probs[1..self.probs.len() - 1].iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| (self.lo + i as i64) as f64 * p).sum()
    }
}

/// Law of `X_t` started at `0` and absorbed at `lo` and `hi`, with the
/// Poisson series truncated once its remainder is below `tol`.
pub fn transient_distribution(env: &Environment, t: f64, lo: i64, hi: i64, tol: f64) -> Result<Transient> {
    if !(lo < 0 && 0 < hi) {
        return Err(Error::domain(format!("window [{lo}, {hi}] must contain 0 in its interior")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("t must be finite and >= 0, got {t}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::domain(format!("tol must lie in (0, 1), got {tol}")));
    }
    let n = (hi - lo - 1) as usize;
    let (omega, mu) = env.slices(lo + 1, hi - 1);
    let rate = mu.iter().map(|m| 1.0 / m).fold(0.0, f64::max);
    let lt = rate * t;
    if !lt.is_finite() {
        return Err(Error::numeric(format!("uniformization rate bound overflow: rate * t = {lt:.3e}")));
    }
    if lt > SERIES_RATE_TIME {
        return Ok(transient_by_squaring(&omega, &mu, lo, rate, t, tol));
    }
    let right: Vec<f64> = (0..n).map(|i| omega[i] / mu[i] / rate).collect();
    let left: Vec<f64> = (0..n).map(|i| (1.0 - omega[i]) / mu[i] / rate).collect();
    let stay: Vec<f64> = (0..n).map(|i| 1.0 - 1.0 / (mu[i] * rate)).collect();

    // cells: 0 = absorbed left, 1..=n interior, n+1 = absorbed right
    let mut p = vec![0.0; n + 2];
    p[(-lo) as usize] = 1.0;
    let mut acc = vec![0.0; n + 2];
    let mut next = vec![0.0; n + 2];
    let mut cum = 0.0;
    let mut tail;
    let mut k: u64 = 0;
    loop {
        let w = if lt == 0.0 {
            if k == 0 { 1.0 } else { 0.0 }
        } else {
            (-lt + k as f64 * lt.ln() - ln_gamma(k as f64 + 1.0)).exp()
        };
        if w > 0.0 {
            for (a, &q) in acc.iter_mut().zip(&p) {
                *a += w * q;
            }
        }
        cum += w;
        // past the mode the Poisson tail is dominated by a geometric series
        if k as f64 + 2.0 > lt {
            let next = w * lt / (k as f64 + 1.0);
            tail = next / (1.0 - lt / (k as f64 + 2.0));
            if tail < tol {
                break;
            }
        }
        next[0] = p[0] + left[0] * p[1];
        next[n + 1] = p[n + 1] + right[n - 1] * p[n];
        for i in 0..n {
            let mut v = stay[i] * p[i + 1];
            if i > 0 {
                v += right[i - 1] * p[i];
            }
            if i + 1 < n {
                v += left[i + 1] * p[i + 2];
            }
            next[i + 1] = v;
        }
        std::mem::swap(&mut p, &mut next);
        k += 1;
    }
    // Log-space weights carry a nearly constant relative bias of order
    // k ln(Λt) ε; rescaling to the known total 1 - tail removes it.
    let scale = (1.0 - tail) / cum;
    for a in &mut acc {
        *a *= scale;
    }
    Ok(Transient { lo, probs: acc, series_error: tail + 4.0 * k as f64 * f64::EPSILON })
}

/// `1 / a` to double-double accuracy. One Newton step on the f64 reciprocal,
/// with the residual formed through an exact product.
fn dd_recip(a: TwoFloat) -> TwoFloat {
    let th = 1.0 / a.hi();
    let e = TwoFloat::from(1.0) - a * th;
    e * th + th
}

/// Kernel of the uniformized chain in double-double, cells as in
/// [`transient_distribution`].
fn dd_kernel(omega: &[f64], mu: &[f64], rate: f64) -> Vec<[TwoFloat; 3]> {
    let n = omega.len();
    let mut rows = vec![[TwoFloat::from(0.0), TwoFloat::from(1.0), TwoFloat::from(0.0)]; n + 2];
    for i in 0..n {
        let inv = dd_recip(TwoFloat::new_mul(mu[i], rate));
        let right = inv * omega[i];
        let left = inv * TwoFloat::new_sub(1.0, omega[i]);
        rows[i + 1] = [left, TwoFloat::from(1.0) - left - right, right];
    }
    rows
}

/// `exp(Qt)` started at `0` as `K^{2^k}`, where `K` is the normalized
/// Poisson mixture of the uniformized kernel over a step `t / 2^k` with
/// `Λt / 2^k ≤ 1/2`.
fn transient_by_squaring(omega: &[f64], mu: &[f64], lo: i64, rate: f64, t: f64, tol: f64) -> Transient {
    let m = omega.len() + 2;
    let kernel = dd_kernel(omega, mu, rate);
    let lt = TwoFloat::new_mul(rate, t);
    let mut k = 0;
    while lt.hi() / 2f64.powi(k) > 0.5 {
        k += 1;
    }
    let x = lt / 2f64.powi(k);
    let factors = 2f64.powi(k);
    // normalized truncation moves at most twice the Poisson tail per step
    let budget = 0.25 * tol / factors;
    let mut terms = 1;
    let mut tail = x.hi();
    while 2.0 * tail / (1.0 - x.hi() / (terms as f64 + 2.0)) > budget {
        terms += 1;
        tail *= x.hi() / terms as f64;
    }

    let zero = TwoFloat::from(0.0);
    let apply_kernel = |a: &[TwoFloat]| -> Vec<TwoFloat> {
        let mut out = vec![zero; m * m];
        for r in 0..m {
            let [l, s, rt] = kernel[r];
            for c in 0..m {
                let mut v = s * a[r * m + c];
                if r > 0 && r < m - 1 {
                    v += l * a[(r - 1) * m + c] + rt * a[(r + 1) * m + c];
                }
                out[r * m + c] = v;
            }
        }
        out
    };
    // Horner: I + x/K P (I + x/(K-1) P (... (I + x P)))
    let mut b = vec![zero; m * m];
    for i in 0..m {
        b[i * m + i] = TwoFloat::from(1.0);
    }
    let mut norm = TwoFloat::from(1.0);
    for j in (1..=terms).rev() {
        let coef = x / j as f64;
        let pb = apply_kernel(&b);
        for (i, v) in b.iter_mut().enumerate() {
            *v = pb[i] * coef + if i % (m + 1) == 0 { 1.0 } else { 0.0 };
        }
        norm = norm * coef + 1.0;
    }
    let inv = dd_recip(norm);
    for v in &mut b {
        *v *= inv;
    }
    let mut scratch = vec![zero; m * m];
    for _ in 0..k {
        for r in 0..m {
            let row = &mut scratch[r * m..(r + 1) * m];
            row.fill(zero);
            for j in 0..m {
                let a = b[r * m + j];
                if a.hi() != 0.0 {
                    for (o, &bj) in row.iter_mut().zip(&b[j * m..(j + 1) * m]) {
                        *o += a * bj;
                    }
                }
            }
        }
        std::mem::swap(&mut b, &mut scratch);
    }
    let start = (-lo) as usize;
    let probs: Vec<f64> = (0..m).map(|c| f64::from(b[start * m + c])).collect();
    let rounding = factors * 4.0 * m as f64 * DD_EPS;
    Transient { lo, probs, series_error: 2.0 * factors * tail + rounding }
}

/// `P(Σ_{z=0}^{hi-1} μ(z) E_z ≤ t)` bounded by
/// `inf_θ exp{θt} Π 1/(1 + θμ(z))`.
pub fn right_leak_bound(env: &Environment, t: f64, hi: i64) -> f64 {
    if hi <= 0 {
        return 1.0;
    }
    let (_, mu) = env.slices(0, hi - 1);
    let total: f64 = mu.iter().sum();
    if total <= t {
        return 1.0;
    }
    if t <= 0.0 {
        return 0.0;
    }
    // stationarity: t = Σ μ/(1+θμ), decreasing in θ from Σμ to 0
    let slope = |th: f64| mu.iter().map(|m| m / (1.0 + th * m)).sum::<f64>() - t;
    let (mut a, mut b) = (0.0, mu.len() as f64 / t);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if slope(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-14 * b {
            break;
        }
    }
    let th = 0.5 * (a + b);
    let log_bound = th * t - mu.iter().map(|m| (th * m).ln_1p()).sum::<f64>();
    log_bound.exp().min(1.0)
}

/// Total leak certificate for the window `[lo, hi]`.
pub fn leak_bound(env: &Environment, t: f64, lo: i64, hi: i64) -> f64 {
    let left: f64 = backtrack_probs(env, lo + 1, 0).iter().map(|q| q.ln()).sum::<f64>().exp();
    left + right_leak_bound(env, t, hi)
}

/// `P(X_t < threshold)` on a certified window, accurate to `tol`.
pub fn uniformization_slowdown(env: &Environment, t: f64, threshold: i64, window: (i64, i64), tol: f64) -> Result<f64> {
    let (lo, hi) = window;
    if !(lo < threshold && threshold <= hi) {
        return Err(Error::domain(format!("threshold {threshold} outside window ({lo}, {hi}]")));
    }
    let leak = leak_bound(env, t, lo, hi);
    if leak > 0.5 * tol {
        return Err(Error::WindowTooSmall(format!("leak {leak:.3e} exceeds {:.3e} on [{lo}, {hi}]", 0.5 * tol)));
    }
    Ok(transient_distribution(env, t, lo, hi, 0.5 * tol)?.below(threshold))
}

/// Smallest window whose leak certificate is below `tol/2`: left end from
/// the backtrack product, right end grown until the Chernoff bound is met.
pub fn oracle_window(env: &Environment, t: f64, tol: f64, max_sites: usize) -> Result<(i64, i64)> {
    let max = max_sites as i64;
    let target = (0.25 * tol).ln();
    let q = backtrack_probs(env, -max, 0);
    let mut log_p = 0.0;
    let mut lo = None;
    for (i, z) in (-max + 1..=0).rev().enumerate() {
        log_p += q[(z + max) as usize].ln();
        if log_p <= target {
            lo = Some(-(i as i64) - 1);
            break;
        }
    }
    let lo = lo.ok_or_else(|| Error::WindowTooSmall(format!("left leak above {tol:.1e} within {max_sites} sites")))?;
    let mut hi = 1;
    while right_leak_bound(env, t, hi) > 0.25 * tol {
        hi += 1;
        if hi - lo + 1 > max {
            return Err(Error::WindowTooSmall(format!("right leak above {tol:.1e} within {max_sites} sites at t = {t}")));
        }
    }
    if hi - lo + 1 > max {
        return Err(Error::WindowTooSmall(format!("window [{lo}, {hi}] exceeds {max_sites} sites")));
    }
    Ok((lo, hi))
}

/// `P_0(A_μ(H(a) ∧ H(y)) > t)`: the walk is still strictly inside `(a, y)`
/// at time `t`.
pub fn exit_survival(env: &Environment, t: f64, a: i64, y: i64, tol: f64) -> Result<f64> {
    Ok(transient_distribution(env, t, a, y, tol)?.interior())
}
