//! Holding-time tail laws.
//!
//! A law is described by its tail exponent `g(r) = -log P(μ > r)`. Each
//! variant is defined through a raw variable with tail `exp(-g_raw(r))`;
//! the served holding time is `raw / m` where `m` is the raw mean, so every
//! served law has mean one and `g(r) = g_raw(m r)`.

use std::f64::consts::E;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;

/// Raw tail shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum TailVariant {
    /// `P(raw > r) = r^{-α}` for `r ≥ 1`, `α > 1`.
    Pareto { alpha: f64 },
    /// `g_raw(r) = (log r)^β` for `r ≥ 1`, `β > 1`.
    IntermediateLogPow { beta: f64 },
    /// `g_raw(r) = log r · log log r` for `r ≥ e`.
    IntermediateLogLog,
    /// `g_raw(r) = r^α`, `α > 0`.
    Weibull { alpha: f64 },
}

/// Regular-variation class of `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailClass {
    /// `e^g` regularly varying with index `α > 1`.
    Polynomial,
    /// `g` slowly varying and `g(r)/log r → ∞`.
    Intermediate,
    /// `g` regularly varying with index `α > 0`.
    Weibull,
}

/// A mean-one holding-time law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailLaw {
    variant: TailVariant,
    scale_m: f64,
}

impl TailVariant {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            TailVariant::Pareto { alpha } => alpha.is_finite() && alpha > 1.0,
            TailVariant::IntermediateLogPow { beta } => beta.is_finite() && beta > 1.0,
            TailVariant::IntermediateLogLog => true,
            TailVariant::Weibull { alpha } => alpha.is_finite() && alpha > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid tail law parameters: {self:?}")))
        }
    }

    /// Lower end of the raw support (where `g_raw` leaves zero).
    fn raw_floor(&self) -> f64 {
        match self {
            TailVariant::Pareto { .. } | TailVariant::IntermediateLogPow { .. } => 1.0,
            TailVariant::IntermediateLogLog => E,
            TailVariant::Weibull { .. } => 0.0,
        }
    }

    /// Tail exponent of the raw variable.
    pub fn g_raw(&self, r: f64) -> f64 {
        match *self {
            TailVariant::Pareto { alpha } => {
                if r <= 1.0 {
                    0.0
                } else {
                    alpha * r.ln()
                }
            }
            TailVariant::IntermediateLogPow { beta } => {
                if r <= 1.0 {
                    0.0
                } else {
                    r.ln().powf(beta)
                }
            }
            TailVariant::IntermediateLogLog => {
                if r <= E {
                    0.0
                } else {
                    let l = r.ln();
                    l * l.ln()
                }
            }
            TailVariant::Weibull { alpha } => {
                if r <= 0.0 {
                    0.0
                } else {
                    r.powf(alpha)
                }
            }
        }
    }

    /// Left-continuous inverse of [`Self::g_raw`] for `y ≥ 0`; `y = 0` maps
    /// to the support floor.
    pub fn g_raw_inv(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return self.raw_floor();
        }
        match *self {
            TailVariant::Pareto { alpha } => (y / alpha).exp(),
            TailVariant::IntermediateLogPow { beta } => y.powf(1.0 / beta).exp(),
            TailVariant::IntermediateLogLog => solve_s_log_s(y).exp(),
            TailVariant::Weibull { alpha } => y.powf(1.0 / alpha),
        }
    }

    /// Mean of the raw variable, `∫₀^∞ exp(-g_raw(r)) dr`.
    fn raw_mean(&self) -> Result<f64> {
        match *self {
            TailVariant::Pareto { alpha } => Ok(alpha / (alpha - 1.0)),
            TailVariant::Weibull { alpha } => Ok(statrs::function::gamma::gamma(1.0 + 1.0 / alpha)),
            // r = e^s: 1 + ∫₀^∞ exp(s - s^β) ds
            TailVariant::IntermediateLogPow { beta } => {
                Ok(1.0 + integrate_to_infinity(|s| (s - s.powf(beta)).exp(), 0.0)?)
            }
            // r = e^s: e + ∫₁^∞ exp(s - s log s) ds
            TailVariant::IntermediateLogLog => {
                Ok(E + integrate_to_infinity(|s| (s - s * s.ln()).exp(), 1.0)?)
            }
        }
    }
}

/// Solves `s log s = y` for `s ≥ 1` (safeguarded Newton).
fn solve_s_log_s(y: f64) -> f64 {
    let (mut lo, mut hi) = (1.0, 2.0f64);
    while hi * hi.ln() < y {
        lo = hi;
        hi *= 2.0;
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = s * s.ln() - y;
        if f > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let mut next = s - f / (s.ln() + 1.0);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 1e-15 * s || hi - lo <= 1e-15 * hi {
            s = next;
            break;
        }
        s = next;
    }
    s
}

/// `∫_a^∞ f` for a positive integrand that eventually decays faster than
/// any exponential, to relative 1e-10; integrated over doubling chunks.
fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut lo = a;
    let mut width = 1.0;
    for _ in 0..200 {
        let hi = lo + width;
        let peak = f(lo).max(f(hi)).max(f(0.5 * (lo + hi)));
        let chunk = adaptive_simpson(&f, lo, hi, 1e-13 * (total + peak * width).max(1e-300))?;
        total += chunk;
        if lo > a + 2.0 && chunk <= 1e-14 * total && f(hi) <= 1e-16 * total {
            return Ok(total);
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::numeric("mean-one normalisation quadrature did not converge"))
}

impl TailLaw {
    /// Builds the mean-one law for the given raw variant.
    pub fn make_mean_one(variant: TailVariant) -> Result<Self> {
        variant.validate()?;
        let scale_m = variant.raw_mean()?;
        if !(scale_m.is_finite() && scale_m > 0.0) {
            return Err(Error::numeric(format!("non-finite raw mean for {variant:?}")));
        }
        Ok(TailLaw { variant, scale_m })
    }

    pub fn pareto(alpha: f64) -> Result<Self> {
        Self::make_mean_one(TailVariant::Pareto { alpha })
    }

    pub fn log_pow(beta: f64) -> Result<Self> {
        Self::make_mean_one(TailVariant::IntermediateLogPow { beta })
    }

    pub fn log_log() -> Result<Self> {
        Self::make_mean_one(TailVariant::IntermediateLogLog)
    }

    pub fn weibull(alpha: f64) -> Result<Self> {
        Self::make_mean_one(TailVariant::Weibull { alpha })
    }

    pub fn variant(&self) -> TailVariant {
        self.variant
    }

    /// Mean of the raw variable; the served law is `raw / scale_m`.
    pub fn scale_m(&self) -> f64 {
        self.scale_m
    }

    pub fn class(&self) -> TailClass {
        match self.variant {
            TailVariant::Pareto { .. } => TailClass::Polynomial,
            TailVariant::IntermediateLogPow { .. } | TailVariant::IntermediateLogLog => TailClass::Intermediate,
            TailVariant::Weibull { .. } => TailClass::Weibull,
        }
    }

    /// Index of regular variation for (P) and (W).
    pub fn alpha(&self) -> Option<f64> {
        match self.variant {
            TailVariant::Pareto { alpha } | TailVariant::Weibull { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Short label used in tables, e.g. `pareto(2)`.
    pub fn label(&self) -> String {
        match self.variant {
            TailVariant::Pareto { alpha } => format!("pareto({alpha})"),
            TailVariant::IntermediateLogPow { beta } => format!("log_pow({beta})"),
            TailVariant::IntermediateLogLog => "log_log".to_string(),
            TailVariant::Weibull { alpha } => format!("weibull({alpha})"),
        }
    }

    /// `-log P(μ > r)` of the served law.
    pub fn g_eval(&self, r: f64) -> Result<f64> {
        if !r.is_finite() {
            return Err(Error::domain(format!("g_eval at non-finite r = {r}")));
        }
        Ok(self.g(r))
    }

    #[inline]
    pub(crate) fn g(&self, r: f64) -> f64 {
        self.variant.g_raw(self.scale_m * r)
    }

    /// Smallest `r` with `g_eval(r) ≥ y`; `y = 0` maps to the support floor.
    pub fn g_inv(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || y.is_infinite() {
            return Err(Error::domain(format!("g_inv at y = {y}")));
        }
        Ok(self.inv(y))
    }

    #[inline]
    pub(crate) fn inv(&self, y: f64) -> f64 {
        self.variant.g_raw_inv(y) / self.scale_m
    }

    /// `P(μ > r)`.
    pub fn tail(&self, r: f64) -> f64 {
        (-self.g(r)).exp()
    }

    /// Holding-time mean `g⁻¹(E)` from a unit exponential `E`.
    #[inline]
    pub fn mu_from_exponential(&self, e: f64) -> f64 {
        self.inv(e)
    }

    /// Draws one holding-time mean.
    pub fn sample_mu<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = rng.sample(Exp1);
        self.inv(e)
    }

    /// Draws from the law conditioned on `μ > level`.
    pub fn sample_mu_above<R: Rng + ?Sized>(&self, level: f64, rng: &mut R) -> f64 {
        let e: f64 = rng.sample(Exp1);
        self.inv(self.g(level) + e).max(level)
    }

    /// Constant `l` with `E[exp g(λ μ)] < ∞` iff `λ < l`, when finite.
    pub fn stability_index(&self) -> Option<f64> {
        match self.variant {
            TailVariant::Weibull { .. } | TailVariant::IntermediateLogPow { .. } => Some(1.0),
            TailVariant::IntermediateLogLog => Some(E),
            TailVariant::Pareto { .. } => None,
        }
    }

    /// Whether `E[exp(Cμ)] < ∞` for some `C > 0`.
    pub fn cramer_holds(&self) -> bool {
        matches!(self.variant, TailVariant::Weibull { alpha } if alpha >= 1.0)
    }
}

/// JSON form `{variant, params, scale_m}`.
#[derive(Serialize, Deserialize)]
struct TailLawJson {
    variant: String,
    params: serde_json::Map<String, serde_json::Value>,
    scale_m: f64,
}

impl Serialize for TailLaw {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut params = serde_json::Map::new();
        let variant = match self.variant {
            TailVariant::Pareto { alpha } => {
                params.insert("alpha".into(), alpha.into());
                "pareto"
            }
            TailVariant::IntermediateLogPow { beta } => {
                params.insert("beta".into(), beta.into());
                "intermediate_log_pow"
            }
            TailVariant::IntermediateLogLog => "intermediate_log_log",
            TailVariant::Weibull { alpha } => {
                params.insert("alpha".into(), alpha.into());
                "weibull"
            }
        };
        TailLawJson { variant: variant.into(), params, scale_m: self.scale_m }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TailLaw {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = TailLawJson::deserialize(d)?;
        let num = |k: &str| {
            raw.params
                .get(k)
                .and_then(|v| v.as_f64())
                .ok_or_else(|| D::Error::custom(format!("missing numeric param `{k}`")))
        };
        let variant = match raw.variant.as_str() {
            "pareto" => TailVariant::Pareto { alpha: num("alpha")? },
            "intermediate_log_pow" => TailVariant::IntermediateLogPow { beta: num("beta")? },
            "intermediate_log_log" => TailVariant::IntermediateLogLog,
            "weibull" => TailVariant::Weibull { alpha: num("alpha")? },
            other => return Err(D::Error::custom(format!("unknown tail law `{other}`"))),
        };
        let law = TailLaw::make_mean_one(variant).map_err(D::Error::custom)?;
        if (law.scale_m - raw.scale_m).abs() > 1e-6 * law.scale_m {
            return Err(D::Error::custom(format!(
                "scale_m {} inconsistent with parameters (expected {})",
                raw.scale_m, law.scale_m
            )));
        }
        Ok(law)
    }
}
