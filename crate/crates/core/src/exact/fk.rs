//! The exponential functional
//! `u(x) = E_x[exp{λ ∫₀^{H(y) ∧ H(a)} μ(S_r) dr}]`.
//!
//! `u` is the minimal nonnegative solution of `u = T u` with
//! `(T u)(z) = (ω(z) u(z+1) + (1-ω(z)) u(z-1)) / (1 - λ μ(z))` and `u = 1`
//! at `a` and `y`. Writing `D = diag(1 - λμ)`, the minimal solution is
//! finite iff `D - P` is a nonsingular M-matrix, which for a tridiagonal
//! Z-matrix is equivalent to all elimination pivots being positive.

use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::numeric::thomas_positive;

/// Entries above this are reported as divergence.
pub const DIVERGENCE_CAP: f64 = 1e12;

/// Parameters of one functional: multiplier `lambda`, killing interval
/// `(a, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FKQuery {
    pub lambda: f64,
    pub a: i64,
    pub y: i64,
}

/// Why an exponential moment was declared infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Divergence {
    /// `λ μ(z) ≥ 1` at some site: one holding time already has no moment.
    SingleSite,
    /// Spectral radius of the weighted kernel is at least one.
    Spectral,
    /// Some entry exceeds [`DIVERGENCE_CAP`].
    Cap,
    /// The monotone iteration failed to settle within its sweep budget.
    NoContraction,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FkOutcome {
    /// Values on the interior sites `a+1 ..= y-1`.
    Finite(Vec<f64>),
    Divergent(Divergence),
}

impl FkOutcome {
    pub fn is_finite(&self) -> bool {
        matches!(self, FkOutcome::Finite(_))
    }
}

fn check(env: &Environment, q: &FKQuery) -> Result<Option<Divergence>> {
    if !(q.lambda >= 0.0 && q.lambda.is_finite()) {
        return Err(Error::domain(format!("lambda must be finite and >= 0, got {}", q.lambda)));
    }
    if q.y - q.a < 2 {
        return Err(Error::domain(format!("interval ({}, {}) has no interior", q.a, q.y)));
    }
    for z in (q.a + 1)..q.y {
        if q.lambda * env.mu(z) >= 1.0 {
            return Ok(Some(Divergence::SingleSite));
        }
    }
    Ok(None)
}

/// Solves for the functional on every interior site.
pub fn fk_solve(env: &Environment, q: &FKQuery) -> Result<FkOutcome> {
    if let Some(d) = check(env, q)? {
        return Ok(FkOutcome::Divergent(d));
    }
    let n = (q.y - q.a - 1) as usize;
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let (w, m) = env.get(q.a + 1 + i as i64);
        diag[i] = 1.0 - q.lambda * m;
        lower[i] = -(1.0 - w);
        upper[i] = -w;
    }
    rhs[0] += 1.0 - env.omega(q.a + 1);
    rhs[n - 1] += env.omega(q.y - 1);
    match thomas_positive(&lower, &diag, &upper, &rhs) {
        None => Ok(FkOutcome::Divergent(Divergence::Spectral)),
        Some(u) if u.iter().any(|&v| !(v <= DIVERGENCE_CAP)) => Ok(FkOutcome::Divergent(Divergence::Cap)),
        Some(u) => Ok(FkOutcome::Finite(u)),
    }
}

/// `u(x)` for `a < x < y`, or the divergence signal.
pub fn fk_functional(env: &Environment, q: &FKQuery, x: i64) -> Result<std::result::Result<f64, Divergence>> {
    if !(q.a < x && x < q.y) {
        return Err(Error::domain(format!("start {x} outside ({}, {})", q.a, q.y)));
    }
    Ok(match fk_solve(env, q)? {
        FkOutcome::Finite(u) => Ok(u[(x - q.a - 1) as usize]),
        FkOutcome::Divergent(d) => Err(d),
    })
}

/// The same functional by monotone Gauss–Seidel iteration from `u ≡ 1`.
///
/// Iterates increase to the minimal fixed point. Stops when the projected
/// remaining change (last change times `r/(1-r)`, `r` the observed ratio
/// of successive changes) falls below `1e-13` relative.
pub fn fk_solve_monotone(env: &Environment, q: &FKQuery, max_sweeps: usize) -> Result<FkOutcome> {
    if let Some(d) = check(env, q)? {
        return Ok(FkOutcome::Divergent(d));
    }
    let n = (q.y - q.a - 1) as usize;
    let sites: Vec<(f64, f64)> = (0..n).map(|i| env.get(q.a + 1 + i as i64)).collect();
    let mut u = vec![1.0; n];
    let mut prev_change = f64::INFINITY;
    for _ in 0..max_sweeps {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let (w, m) = sites[i];
            let left = if i == 0 { 1.0 } else { u[i - 1] };
            let right = if i + 1 == n { 1.0 } else { u[i + 1] };
            let new = (w * right + (1.0 - w) * left) / (1.0 - q.lambda * m);
            change = change.max((new - u[i]) / new);
            u[i] = new;
        }
        if u.iter().any(|&v| !(v <= DIVERGENCE_CAP)) {
            return Ok(FkOutcome::Divergent(Divergence::Cap));
        }
        if change == 0.0 {
            return Ok(FkOutcome::Finite(u));
        }
        let r = change / prev_change;
        if prev_change.is_finite() && r < 1.0 && change * r / (1.0 - r) < 1e-13 {
            return Ok(FkOutcome::Finite(u));
        }
        prev_change = change;
    }
    Ok(FkOutcome::Divergent(Divergence::NoContraction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::OmegaLaw;
    use crate::exact::green::green_row;
    use crate::laws::TailLaw;
    use crate::rng::replica_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_env(seed: u64) -> Environment {
        Environment::new(OmegaLaw::Uniform { a: 0.6, b: 0.8 }, TailLaw::weibull(1.0).unwrap(), seed).unwrap()
    }

    fn value(env: &Environment, lambda: f64, a: i64, y: i64, x: i64) -> f64 {
        fk_functional(env, &FKQuery { lambda, a, y }, x).unwrap().unwrap()
    }

    #[test]
    fn zero_lambda_is_one() {
        let env = random_env(1);
        match fk_solve(&env, &FKQuery { lambda: 0.0, a: -5, y: 9 }).unwrap() {
            FkOutcome::Finite(u) => assert!(u.iter().all(|&v| (v - 1.0).abs() < 1e-14)),
            _ => panic!("lambda = 0 must be finite"),
        }
    }

    #[test]
    fn single_site_closed_form() {
        let mut env = Environment::homogeneous(0.7, 1.0).unwrap();
        env.plant_mu(0, 2.0).unwrap();
        // λμ = 0.5 => 1 / (1 - 0.5) = 2
        assert!((value(&env, 0.25, -1, 1, 0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_site_divergence() {
        let mut env = Environment::homogeneous(0.7, 1.0).unwrap();
        env.plant_mu(3, 4.0).unwrap();
        let r = fk_functional(&env, &FKQuery { lambda: 0.25, a: -2, y: 6 }, 0).unwrap();
        assert_eq!(r, Err(Divergence::SingleSite));
    }

    #[test]
    fn spectral_divergence_detected() {
        // λμ just below 1 everywhere: every site is fine alone but the
        // weighted kernel has radius > 1 on a long interval
        let env = Environment::homogeneous(0.6, 1.0).unwrap();
        let q = FKQuery { lambda: 0.9, a: -20, y: 20 };
        assert!(matches!(fk_solve(&env, &q).unwrap(), FkOutcome::Divergent(_)));
        assert!(matches!(fk_solve_monotone(&env, &q, 100_000).unwrap(), FkOutcome::Divergent(_)));
    }

    #[test]
    fn monotone_matches_direct() {
        for seed in 0..6 {
            let env = random_env(seed);
            let (a, y) = (-6, 18);
            let mu_max = env.max_mu(a + 1, y - 1);
            for &frac in &[0.01, 0.1, 0.3] {
                let q = FKQuery { lambda: frac / mu_max, a, y };
                let (FkOutcome::Finite(d), FkOutcome::Finite(m)) =
                    (fk_solve(&env, &q).unwrap(), fk_solve_monotone(&env, &q, 1_000_000).unwrap())
                else {
                    continue;
                };
                for (x, z) in d.iter().zip(&m) {
                    assert!((x - z).abs() < 1e-9 * x, "seed {seed}: {x} vs {z}");
                }
            }
        }
    }

    #[test]
    fn feynman_kac_identity() {
        let env = random_env(42);
        let a = -10;
        let mu_max = env.max_mu(a + 1, 40);
        let lambda = 0.2 / mu_max;
        for x in (a + 2)..=40 {
            let lhs = value(&env, lambda, a, x, x - 1);
            let row = green_row(&env, a, x, x - 1).unwrap();
            let FkOutcome::Finite(f) = fk_solve(&env, &FKQuery { lambda, a, y: x }).unwrap() else {
                panic!("finite expected")
            };
            let sum: f64 = row.iter().zip(&f).enumerate().map(|(i, (g, fv))| g * env.mu(a + 1 + i as i64) * fv).sum();
            let rhs = 1.0 + lambda * sum;
            assert!((lhs - rhs).abs() <= 1e-8 * lhs, "x={x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn monte_carlo_three_sites() {
        // paths are simulated; the holding times are integrated out per
        // visit, E[exp{λμE}] = 1/(1-λμ)
        let env = random_env(5);
        let (a, y) = (-2, 2);
        let lambda = 0.3 / env.max_mu(-1, 1);
        let exact = value(&env, lambda, a, y, 0);
        let mut rng = replica_rng(9, 0);
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let (mut x, mut log_w) = (0i64, 0.0);
                while x > a && x < y {
                    let (w, m) = env.get(x);
                    log_w -= (1.0 - lambda * m).ln();
                    x += if rng.random::<f64>() < w { 1 } else { -1 };
                }
                log_w.exp()
            })
            .collect();
        let (m, se) = crate::stats::mean_se(&samples);
        assert!((m - exact).abs() < 3.0 * se, "{m} ± {se} vs {exact}");
    }

    proptest! {
        #[test]
        fn sub_multiplicative(seed in 0u64..500, x in -8i64..4, gap1 in 1i64..8, gap2 in 1i64..8, frac in 0.0f64..0.6) {
            let env = random_env(seed);
            let a = -10;
            let (y, z) = (x + gap1, x + gap1 + gap2);
            let lambda = frac / env.max_mu(a + 1, z - 1);
            let f = |s: i64, t: i64| fk_functional(&env, &FKQuery { lambda, a, y: t }, s).unwrap();
            if let (Ok(xz), Ok(xy), Ok(yz)) = (f(x, z), f(x, y), f(y, z)) {
                prop_assert!(xz <= xy * yz * (1.0 + 1e-10));
                prop_assert!(xy >= 1.0 && yz >= 1.0);
            }
        }
    }
}
