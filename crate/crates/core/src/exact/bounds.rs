//! Rigorous quenched bounds on `P(X_t < vt)`.

use serde::{Deserialize, Serialize};

use super::fk::{fk_functional, FKQuery};
use super::hitting::log_hitting_prob_left;
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::numeric::golden_section;
use crate::stats::EstimateCI;

/// Parameters of one slowdown evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowdownQuery {
    pub t: f64,
    pub v: f64,
    pub u: f64,
    pub eps: f64,
    pub delta: f64,
}

impl SlowdownQuery {
    /// Default choices `u = (v + v_P)/2`, `ε = (v_P - u)/4` and
    /// `δ = 1 - (u + ε)/v_P - 0.05` (half the slack when that is not
    /// positive).
    pub fn with_defaults(t: f64, v: f64, v_p: f64) -> Result<Self> {
        let u = 0.5 * (v + v_p);
        let eps = 0.25 * (v_p - u);
        let slack = 1.0 - (u + eps) / v_p;
        let delta = if slack - 0.05 > 0.0 { slack - 0.05 } else { 0.5 * slack };
        let q = SlowdownQuery { t, v, u, eps, delta };
        q.validate(v_p)?;
        Ok(q)
    }

    pub fn validate(&self, v_p: f64) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::domain(format!("t must be positive, got {}", self.t)));
        }
        if !(0.0 < self.v && self.v < self.u && self.u < v_p) {
            return Err(Error::domain(format!(
                "need 0 < v < u < v_P, got v = {}, u = {}, v_P = {v_p}",
                self.v, self.u
            )));
        }
        if !(self.eps > 0.0 && self.eps < v_p - self.u) {
            return Err(Error::domain(format!("eps = {} outside (0, v_P - u)", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0 && (self.u + self.eps) / v_p < 1.0 - self.delta) {
            return Err(Error::domain(format!("delta = {} violates (u + eps)/v_P < 1 - delta", self.delta)));
        }
        Ok(())
    }

    /// Left boundary `-⌈εt⌉`.
    pub fn left(&self) -> i64 {
        -((self.eps * self.t).ceil() as i64)
    }

    /// Target `⌈ut⌉`.
    pub fn target(&self) -> i64 {
        (self.u * self.t).ceil() as i64
    }

    /// Threshold `⌈vt⌉`.
    pub fn threshold(&self) -> i64 {
        (self.v * self.t).ceil() as i64
    }
}

/// Result of the Chebyshev optimisation over `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyshevBound {
    pub value: f64,
    pub lambda: f64,
}

const LAMBDA_GRID: usize = 32;

/// `min_λ exp{-λt} E_0[exp{λ A_μ(H(⌈ut⌉) ∧ H(-⌈εt⌉))}]`.
///
/// The exponent `-λt + log f(λ)` is convex in `λ`, so a log-spaced scan
/// followed by golden-section refinement between the neighbours of the
/// best grid point finds the minimum. Divergent `λ` count as `+∞`.
pub fn chebyshev_ub(env: &Environment, sq: &SlowdownQuery) -> Result<ChebyshevBound> {
    let (a, y) = (sq.left().min(-1), sq.target().max(1));
    let mu_max = env.max_mu(a + 1, y - 1);
    let objective = |lambda: f64| -> Result<f64> {
        let q = FKQuery { lambda, a, y };
        Ok(match fk_functional(env, &q, 0)? {
            Ok(f) => -lambda * sq.t + f.ln(),
            Err(_) => f64::INFINITY,
        })
    };
    let (lo, hi) = (1e-6 / mu_max, 0.999 / mu_max);
    let grid: Vec<f64> = (0..LAMBDA_GRID)
        .map(|i| lo * (hi / lo).powf(i as f64 / (LAMBDA_GRID - 1) as f64))
        .collect();
    let mut values = Vec::with_capacity(LAMBDA_GRID);
    for &l in &grid {
        values.push(objective(l)?);
    }
    let (best, &best_val) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is not empty");
    if !(best_val < 0.0) {
        return Ok(ChebyshevBound { value: 1.0, lambda: 0.0 });
    }
    let left = grid[best.saturating_sub(1)];
    let right = grid[(best + 1).min(LAMBDA_GRID - 1)];
    let mut err = None;
    let (l_star, refined) = golden_section(
        |l| match objective(l) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                f64::INFINITY
            }
        },
        left,
        right,
        1e-6,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let (lambda, exponent) = if refined < best_val { (l_star, refined) } else { (grid[best], best_val) };
    Ok(ChebyshevBound { value: exponent.exp().min(1.0), lambda })
}

/// The three terms of [`slowdown_upper_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperTerms {
    /// `P_{⌈ut⌉}(H(⌈vt⌉) < ∞)`
    pub backtrack: f64,
    pub chebyshev: ChebyshevBound,
    /// `P_0(H(-⌈εt⌉) < ∞)`
    pub left: f64,
}

impl UpperTerms {
    pub fn total(&self) -> f64 {
        (self.backtrack + self.chebyshev.value + self.left).min(1.0)
    }
}

pub fn upper_bound_terms(env: &Environment, sq: &SlowdownQuery) -> Result<UpperTerms> {
    Ok(UpperTerms {
        backtrack: log_hitting_prob_left(env, sq.target(), sq.threshold()).exp(),
        chebyshev: chebyshev_ub(env, sq)?,
        left: log_hitting_prob_left(env, 0, sq.left()).exp(),
    })
}

/// Three-term bound: backtrack from `⌈ut⌉` to `⌈vt⌉`, slow arrival at
/// `⌈ut⌉`, or a visit to `-⌈εt⌉`.
pub fn slowdown_upper_bound(env: &Environment, sq: &SlowdownQuery) -> Result<f64> {
    Ok(upper_bound_terms(env, sq)?.total())
}

/// `exp{-t / max_{0 ≤ x < ⌈vt⌉} μ(x)}`: the first holding time at the
/// slowest site in front of the walk outlasts `t`.
pub fn slowdown_lower_bound(env: &Environment, t: f64, v: f64) -> Result<f64> {
    if !(v * t >= 1.0) {
        return Err(Error::domain(format!("lower bound needs vt >= 1, got {}", v * t)));
    }
    let n = (v * t).ceil() as i64;
    Ok((-t / env.max_mu(0, n - 1)).exp())
}

/// Lower and upper bounds with optional exact and Monte Carlo values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundBracket {
    pub lower: f64,
    pub upper: f64,
    pub oracle: Option<f64>,
    pub monte_carlo: Option<EstimateCI>,
}

/// Column order of [`BoundBracket::csv_row`].
pub const BRACKET_CSV_HEADER: &str = "lower,upper,oracle,mc_estimate,mc_ci_lo,mc_ci_hi,mc_replicas";

impl BoundBracket {
    /// `lower ≤ upper`, and `lower ≤ oracle ≤ upper` up to `tol`.
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.lower <= self.upper
            && self.oracle.map_or(true, |o| self.lower <= o + tol && o - tol <= self.upper)
    }

    /// Empty cells for absent values.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mc = self.monte_carlo.as_ref();
        format!(
            "{},{},{},{},{},{},{}",
            self.lower,
            self.upper,
            opt(self.oracle),
            opt(mc.map(|m| m.estimate)),
            opt(mc.map(|m| m.ci_lo)),
            opt(mc.map(|m| m.ci_hi)),
            mc.map(|m| m.replicas.to_string()).unwrap_or_default()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{Holding, OmegaLaw};
    use crate::laws::TailLaw;

    fn env(seed: u64) -> Environment {
        Environment::new(OmegaLaw::Uniform { a: 0.6, b: 0.8 }, TailLaw::weibull(1.0).unwrap(), seed).unwrap()
    }

    fn v_p() -> f64 {
        OmegaLaw::Uniform { a: 0.6, b: 0.8 }.solomon_speed()
    }

    #[test]
    fn defaults_are_admissible() {
        let vp = v_p();
        for frac in [0.1, 0.5, 0.9] {
            let q = SlowdownQuery::with_defaults(100.0, frac * vp, vp).unwrap();
            assert!(q.v < q.u && q.u < vp && q.eps < vp - q.u);
            assert!((q.u + q.eps) / vp < 1.0 - q.delta);
        }
        assert!(SlowdownQuery::with_defaults(100.0, vp, vp).is_err());
    }

    #[test]
    fn lower_bound_plugins() {
        let h = Environment::homogeneous(0.75, 1.0).unwrap();
        assert!((slowdown_lower_bound(&h, 7.0, 0.5).unwrap() - (-7f64).exp()).abs() < 1e-15);
        let mut e = Environment::homogeneous(0.75, 1.0).unwrap();
        e.plant_mu(1, 10.0).unwrap();
        assert!((slowdown_lower_bound(&e, 5.0, 0.5).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert!(slowdown_lower_bound(&e, 1.0, 0.5).is_err());
    }

    #[test]
    fn chebyshev_in_unit_interval() {
        for seed in 0..5 {
            let e = env(seed);
            let q = SlowdownQuery::with_defaults(200.0, 0.5 * v_p(), v_p()).unwrap();
            let c = chebyshev_ub(&e, &q).unwrap();
            assert!(c.value > 0.0 && c.value <= 1.0);
        }
    }

    #[test]
    fn chebyshev_decreases_in_t_at_fixed_lambda() {
        let e = env(3);
        let q = SlowdownQuery::with_defaults(400.0, 0.3 * v_p(), v_p()).unwrap();
        let c = chebyshev_ub(&e, &q).unwrap();
        assert!(c.lambda > 0.0);
        let f = fk_functional(&e, &FKQuery { lambda: c.lambda, a: q.left(), y: q.target() }, 0)
            .unwrap()
            .unwrap();
        let at = |t: f64| (-c.lambda * t).exp() * f;
        assert!((at(q.t) - c.value).abs() < 1e-9 * c.value);
        assert!(at(q.t * 1.5) < at(q.t) && at(q.t * 2.0) < at(q.t * 1.5));
    }

    #[test]
    fn chebyshev_refinement_not_worse_than_grid() {
        let e = env(11);
        let q = SlowdownQuery::with_defaults(300.0, 0.3 * v_p(), v_p()).unwrap();
        let c = chebyshev_ub(&e, &q).unwrap();
        let (a, y) = (q.left(), q.target());
        let mu_max = e.max_mu(a + 1, y - 1);
        for i in 0..LAMBDA_GRID {
            let l = 1e-6 / mu_max * (0.999 / 1e-6f64).powf(i as f64 / (LAMBDA_GRID - 1) as f64);
            if let Ok(f) = fk_functional(&e, &FKQuery { lambda: l, a, y }, 0).unwrap() {
                assert!(c.value <= (-l * q.t).exp() * f * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn upper_bound_decays_with_t() {
        let e = Environment::with_holding(OmegaLaw::Deterministic { p: 0.75 }, Holding::Constant(1.0), 0).unwrap();
        let b = |t: f64| slowdown_upper_bound(&e, &SlowdownQuery::with_defaults(t, 0.25, 0.5).unwrap()).unwrap();
        let (b1, b2) = (b(200.0), b(800.0));
        assert!(b1 < 1.0 && b2 < b1);
    }

    #[test]
    fn bracket_csv_and_json() {
        let b = BoundBracket { lower: 0.1, upper: 0.5, oracle: Some(0.2), monte_carlo: None };
        assert_eq!(b.csv_row(), "0.1,0.5,0.2,,,,");
        assert_eq!(BRACKET_CSV_HEADER.split(',').count(), b.csv_row().split(',').count());
        let j = serde_json::to_string(&b).unwrap();
        assert_eq!(serde_json::from_str::<BoundBracket>(&j).unwrap(), b);
        assert!(b.is_consistent(0.0));
        assert!(!BoundBracket { oracle: Some(0.6), ..b.clone() }.is_consistent(1e-8));
    }
}
