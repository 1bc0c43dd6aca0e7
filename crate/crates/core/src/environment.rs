//! Random environments `(ω(x), μ(x))` on the integer lattice.
//!
//! Site values are a pure function of `(seed, x)`: ω uses sub-stream 0 and
//! μ sub-stream 1, so changing the tail law leaves ω untouched. The realized
//! window is a cache; reading outside it computes the value on the fly
//! without mutating anything.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::TailLaw;
use crate::rng::site_uniform;

const OMEGA_STREAM: u64 = 0;
const MU_STREAM: u64 = 1;

/// Law of the transition probabilities `ω(x)`, supported in `(1/2, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum OmegaLaw {
    Deterministic { p: f64 },
    Uniform { a: f64, b: f64 },
    /// `p1` with probability `q`, otherwise `p2`.
    TwoPoint { p1: f64, p2: f64, q: f64 },
}

fn in_support(p: f64) -> bool {
    p > 0.5 && p < 1.0
}

impl OmegaLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            OmegaLaw::Deterministic { p } => in_support(p),
            OmegaLaw::Uniform { a, b } => in_support(a) && in_support(b) && a < b,
            OmegaLaw::TwoPoint { p1, p2, q } => in_support(p1) && in_support(p2) && q > 0.0 && q < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "omega law {self:?} must be supported in (1/2, 1) with essinf > 1/2"
            )))
        }
    }

    /// Essential infimum of ω.
    pub fn essinf(&self) -> f64 {
        match *self {
            OmegaLaw::Deterministic { p } => p,
            OmegaLaw::Uniform { a, .. } => a,
            OmegaLaw::TwoPoint { p1, p2, .. } => p1.min(p2),
        }
    }

    pub fn esssup(&self) -> f64 {
        match *self {
            OmegaLaw::Deterministic { p } => p,
            OmegaLaw::Uniform { b, .. } => b,
            OmegaLaw::TwoPoint { p1, p2, .. } => p1.max(p2),
        }
    }

    /// Quantile map from a uniform variate.
    pub fn from_uniform(&self, u: f64) -> f64 {
        match *self {
            OmegaLaw::Deterministic { p } => p,
            OmegaLaw::Uniform { a, b } => a + (b - a) * u,
            OmegaLaw::TwoPoint { p1, p2, q } => {
                if u < q {
                    p1
                } else {
                    p2
                }
            }
        }
    }

    /// `E[(1-ω)/ω]`.
    pub fn rho_mean(&self) -> f64 {
        let rho = |p: f64| (1.0 - p) / p;
        match *self {
            OmegaLaw::Deterministic { p } => rho(p),
            OmegaLaw::Uniform { a, b } => (b / a).ln() / (b - a) - 1.0,
            OmegaLaw::TwoPoint { p1, p2, q } => q * rho(p1) + (1.0 - q) * rho(p2),
        }
    }

    /// Asymptotic speed `(1 - E ρ) / (1 + E ρ)`.
    pub fn solomon_speed(&self) -> f64 {
        let r = self.rho_mean();
        (1.0 - r) / (1.0 + r)
    }
}

/// Source of the holding-time means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Holding {
    Law(TailLaw),
    /// Every site has the same mean holding time.
    Constant(f64),
}

/// Serializable description of an environment: laws, seed, planted sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentHeader {
    pub omega_law: OmegaLaw,
    pub holding: Holding,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub planted: BTreeMap<i64, f64>,
}

#[derive(Debug, Clone)]
pub struct Environment {
    omega_law: OmegaLaw,
    holding: Holding,
    seed: u64,
    planted: BTreeMap<i64, f64>,
    lo: i64,
    omega: Vec<f64>,
    mu: Vec<f64>,
}

impl Environment {
    pub fn new(omega_law: OmegaLaw, tail_law: TailLaw, seed: u64) -> Result<Self> {
        Self::with_holding(omega_law, Holding::Law(tail_law), seed)
    }

    pub fn with_holding(omega_law: OmegaLaw, holding: Holding, seed: u64) -> Result<Self> {
        omega_law.validate()?;
        if let Holding::Constant(c) = holding {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::config(format!("constant holding mean must be positive, got {c}")));
            }
        }
        Ok(Environment {
            omega_law,
            holding,
            seed,
            planted: BTreeMap::new(),
            lo: 0,
            omega: Vec::new(),
            mu: Vec::new(),
        })
    }

    /// `ω ≡ p`, `μ ≡ mu`.
    pub fn homogeneous(p: f64, mu: f64) -> Result<Self> {
        Self::with_holding(OmegaLaw::Deterministic { p }, Holding::Constant(mu), 0)
    }

    pub fn from_header(h: &EnvironmentHeader) -> Result<Self> {
        let mut env = Self::with_holding(h.omega_law, h.holding, h.seed)?;
        for (&x, &m) in &h.planted {
            env.plant_mu(x, m)?;
        }
        Ok(env)
    }

    pub fn header(&self) -> EnvironmentHeader {
        EnvironmentHeader {
            omega_law: self.omega_law,
            holding: self.holding,
            seed: self.seed,
            planted: self.planted.clone(),
        }
    }

    pub fn omega_law(&self) -> OmegaLaw {
        self.omega_law
    }

    pub fn holding(&self) -> Holding {
        self.holding
    }

    pub fn tail_law(&self) -> Option<TailLaw> {
        match self.holding {
            Holding::Law(l) => Some(l),
            Holding::Constant(_) => None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Essential infimum of ω, the floor used by all truncation bounds.
    pub fn p_floor(&self) -> f64 {
        self.omega_law.essinf()
    }

    /// Homogeneous-floor backtrack ratio `(1 - p_floor) / p_floor`.
    pub fn rho_floor(&self) -> f64 {
        let p = self.p_floor();
        (1.0 - p) / p
    }

    /// Site values computed from the seed, ignoring the cache.
    pub fn compute_site(&self, x: i64) -> (f64, f64) {
        let omega = self.omega_law.from_uniform(site_uniform(self.seed, x, OMEGA_STREAM));
        let mu = match self.planted.get(&x) {
            Some(&m) => m,
            None => match self.holding {
                Holding::Constant(c) => c,
                Holding::Law(law) => {
                    let u = site_uniform(self.seed, x, MU_STREAM);
                    law.mu_from_exponential(-u.ln())
                }
            },
        };
        (omega, mu)
    }

    /// Site pair without extending the window.
    #[inline]
    pub fn get(&self, x: i64) -> (f64, f64) {
        let i = x.wrapping_sub(self.lo);
        if i >= 0 && (i as usize) < self.omega.len() {
            (self.omega[i as usize], self.mu[i as usize])
        } else {
            self.compute_site(x)
        }
    }

    #[inline]
    pub fn omega(&self, x: i64) -> f64 {
        self.get(x).0
    }

    #[inline]
    pub fn mu(&self, x: i64) -> f64 {
        self.get(x).1
    }

    /// Site pair, extending the realized window to include `x`.
    pub fn site(&mut self, x: i64) -> (f64, f64) {
        self.extend(x, x);
        self.get(x)
    }

    /// Realized window `[lo, hi]`, if any.
    pub fn window(&self) -> Option<(i64, i64)> {
        if self.omega.is_empty() {
            None
        } else {
            Some((self.lo, self.lo + self.omega.len() as i64 - 1))
        }
    }

    /// Realizes every site in `[lo, hi]`. Existing values are never changed.
    pub fn extend(&mut self, lo: i64, hi: i64) {
        if lo > hi {
            return;
        }
        match self.window() {
            None => {
                self.lo = lo;
                let (om, mu): (Vec<f64>, Vec<f64>) = (lo..=hi).map(|x| self.compute_site(x)).unzip();
                self.omega = om;
                self.mu = mu;
            }
            Some((cur_lo, cur_hi)) => {
                if lo < cur_lo {
                    let (mut om, mut mu): (Vec<f64>, Vec<f64>) =
                        (lo..cur_lo).map(|x| self.compute_site(x)).unzip();
                    om.append(&mut self.omega);
                    mu.append(&mut self.mu);
                    self.omega = om;
                    self.mu = mu;
                    self.lo = lo;
                }
                for x in (cur_hi + 1)..=hi {
                    let (o, m) = self.compute_site(x);
                    self.omega.push(o);
                    self.mu.push(m);
                }
            }
        }
    }

    /// Overrides `μ(x)`; used by the planted estimator and by tests.
    pub fn plant_mu(&mut self, x: i64, mu: f64) -> Result<()> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::config(format!("planted mu must be positive, got {mu}")));
        }
        self.planted.insert(x, mu);
        if let Some((lo, hi)) = self.window() {
            if lo <= x && x <= hi {
                self.mu[(x - lo) as usize] = mu;
            }
        }
        Ok(())
    }

    /// Copies of `ω` and `μ` over `[lo, hi]`.
    pub fn slices(&self, lo: i64, hi: i64) -> (Vec<f64>, Vec<f64>) {
        (lo..=hi).map(|x| self.get(x)).unzip()
    }

    /// Largest `μ` over `[lo, hi]`.
    pub fn max_mu(&self, lo: i64, hi: i64) -> f64 {
        (lo..=hi).map(|x| self.mu(x)).fold(f64::MIN_POSITIVE, f64::max)
    }

    /// Writes `x,omega,mu` rows for `[lo, hi]`.
    pub fn write_csv<W: Write>(&self, mut w: W, lo: i64, hi: i64) -> Result<()> {
        writeln!(w, "x,omega,mu")?;
        for x in lo..=hi {
            let (o, m) = self.get(x);
            writeln!(w, "{x},{o},{m}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_env(seed: u64) -> Environment {
        Environment::new(OmegaLaw::Uniform { a: 0.6, b: 0.8 }, TailLaw::weibull(1.0).unwrap(), seed).unwrap()
    }

    #[test]
    fn deterministic_omega() {
        let mut env =
            Environment::new(OmegaLaw::Deterministic { p: 0.75 }, TailLaw::pareto(2.0).unwrap(), 3).unwrap();
        assert_eq!(env.site(5).0, 0.75);
    }

    #[test]
    fn order_independent_sites() {
        let mut a = uniform_env(9);
        let first = a.site(3);
        a.site(1_000_000);
        a.site(-50);
        assert_eq!(a.site(3), first);
        let mut b = uniform_env(9);
        b.extend(-20, 40);
        let mut c = uniform_env(9);
        for x in (-20..=40).rev() {
            c.site(x);
        }
        assert_eq!(b.slices(-20, 40), c.slices(-20, 40));
        assert_eq!(b.get(3), first);
    }

    #[test]
    fn extension_never_mutates() {
        let mut env = uniform_env(1);
        env.extend(0, 10);
        let before = env.slices(0, 10);
        env.extend(-100, 200);
        assert_eq!(env.slices(0, 10), before);
        assert_eq!(env.window(), Some((-100, 200)));
    }

    #[test]
    fn tail_law_change_keeps_omega() {
        let a = uniform_env(5);
        let b = Environment::new(OmegaLaw::Uniform { a: 0.6, b: 0.8 }, TailLaw::pareto(3.0).unwrap(), 5).unwrap();
        for x in -10..10 {
            assert_eq!(a.omega(x), b.omega(x));
            assert_ne!(a.mu(x), b.mu(x));
        }
    }

    #[test]
    fn values_in_support() {
        let env = Environment::new(
            OmegaLaw::TwoPoint { p1: 0.6, p2: 0.9, q: 0.5 },
            TailLaw::log_pow(2.0).unwrap(),
            17,
        )
        .unwrap();
        for x in -500..500 {
            let (o, m) = env.get(x);
            assert!(o == 0.6 || o == 0.9);
            assert!(m > 0.0);
        }
    }

    #[test]
    fn rho_and_speed() {
        assert!((OmegaLaw::Deterministic { p: 0.75 }.rho_mean() - 1.0 / 3.0).abs() < 1e-15);
        let u = OmegaLaw::Uniform { a: 0.6, b: 0.8 };
        assert!((u.rho_mean() - (5.0 * (4.0f64 / 3.0).ln() - 1.0)).abs() < 1e-14);
        assert!((u.rho_mean() - 0.438_410).abs() < 1e-6);
        let r = 5.0 * (4.0f64 / 3.0).ln() - 1.0;
        assert!((u.solomon_speed() - (1.0 - r) / (1.0 + r)).abs() < 1e-15);
        assert!((u.solomon_speed() - 0.390_424).abs() < 1e-6);
        let tp = OmegaLaw::TwoPoint { p1: 0.6, p2: 0.9, q: 0.5 };
        assert!((tp.rho_mean() - 7.0 / 18.0).abs() < 1e-15);
        assert!((OmegaLaw::Deterministic { p: 0.75 }.solomon_speed() - 0.5).abs() < 1e-15);
        assert!(OmegaLaw::Deterministic { p: 1.0 - 1e-9 }.solomon_speed() > 0.999_999);
    }

    #[test]
    fn uniform_rho_mc_cross_check() {
        let u = OmegaLaw::Uniform { a: 0.6, b: 0.8 };
        let n = 400_000;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let w = u.from_uniform(site_uniform(99, i, 0));
                (1.0 - w) / w
            })
            .collect();
        let (m, se) = crate::stats::mean_se(&vals);
        assert!((m - u.rho_mean()).abs() < 4.0 * se);
    }

    #[test]
    fn invalid_omega_rejected() {
        assert!(OmegaLaw::Deterministic { p: 0.5 }.validate().is_err());
        assert!(OmegaLaw::Uniform { a: 0.4, b: 0.8 }.validate().is_err());
        assert!(OmegaLaw::TwoPoint { p1: 0.6, p2: 1.0, q: 0.5 }.validate().is_err());
    }

    #[test]
    fn planted_override_and_header() {
        let mut env = uniform_env(4);
        env.extend(0, 5);
        env.plant_mu(2, 50.0).unwrap();
        assert_eq!(env.mu(2), 50.0);
        let h = env.header();
        let json = serde_json::to_string(&h).unwrap();
        let back: EnvironmentHeader = serde_json::from_str(&json).unwrap();
        let env2 = Environment::from_header(&back).unwrap();
        assert_eq!(env2.get(2), env.get(2));
        assert_eq!(env2.get(7), env.get(7));
    }

    #[test]
    fn csv_export() {
        let env = Environment::homogeneous(0.75, 1.0).unwrap();
        let mut buf = Vec::new();
        env.write_csv(&mut buf, 0, 1).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,omega,mu\n0,0.75,1\n1,0.75,1\n");
    }
}
