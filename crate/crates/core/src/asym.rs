//! Deterministic rate functions: `h(t)`, the quenched scales `M(t)`,
//! extreme-value bands and predicted exponents.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::{TailLaw, TailVariant};
use crate::rng::{derive_seed, replica_rng, tags};

/// `φ(h) = t/h - g(h) + log t`; strictly decreasing in `h`.
fn phi(law: &TailLaw, t: f64, h: f64) -> f64 {
    t / h - law.g(h) + t.ln()
}

/// Largest `h` with `t/h ≥ g(h) - log t`.
///
/// Scans geometrically down from `h = t` (or up, if `t` is still
/// admissible) for the first admissible point, then bisects to relative
/// `1e-9`. The returned `h` satisfies the inequality.
pub fn solve_h(law: &TailLaw, t: f64) -> Result<f64> {
    if !(t > 1.0 && t.is_finite()) {
        return Err(Error::domain(format!("solve_h needs finite t > 1, got {t}")));
    }
    let ln_t = t.ln();
    if phi(law, t, ln_t) < 0.0 {
        return Err(Error::domain(format!("t = {t} too small: t/h >= g(h) - log t fails at h = log t")));
    }
    let (mut lo, mut hi);
    if phi(law, t, t) >= 0.0 {
        lo = t;
        hi = 2.0 * t;
        while phi(law, t, hi) >= 0.0 {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::numeric(format!("no upper bracket for h at t = {t}")));
            }
        }
    } else {
        hi = t;
        lo = 0.5 * t;
        while lo > ln_t && phi(law, t, lo) < 0.0 {
            hi = lo;
            lo *= 0.5;
        }
        if lo <= ln_t {
            lo = ln_t;
        }
    }
    while hi - lo > 1e-9 * lo {
        let mid = 0.5 * (lo + hi);
        if phi(law, t, mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Whether `t/h(t) ≤ 2 (g(h(t)) - log t)`.
pub fn check_h_slack(law: &TailLaw, t: f64) -> Result<bool> {
    let h = solve_h(law, t)?;
    Ok(t / h <= 2.0 * (law.g(h) - t.ln()))
}

/// Choice of quenched scale `M(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MMode {
    /// `g⁻¹((1-ε) log t)`
    LowerInv { eps: f64 },
    /// `g⁻¹((1+ε) log t)`
    UpperInv { eps: f64 },
    /// `g⁻¹(log t)`
    Stable,
    /// `u_ρ(t) = (t log t loglog t)^{1/α} (logloglog t)^{1/α+ρ}`, Pareto only.
    ParetoUpper { rho: f64 },
    /// `v_c(t) = c (t / loglog t)^{1/α}`, Pareto only.
    ParetoLower { c: f64 },
}

fn loglog(t: f64) -> Result<f64> {
    if !(t > std::f64::consts::E) {
        return Err(Error::domain(format!("log log t needs t > e, got {t}")));
    }
    Ok(t.ln().ln())
}

fn logloglog(t: f64) -> Result<f64> {
    if !(t > std::f64::consts::E.exp()) {
        return Err(Error::domain(format!("log log log t needs t > e^e, got {t}")));
    }
    Ok(t.ln().ln().ln())
}

fn pareto_alpha(law: &TailLaw) -> Result<f64> {
    match law.variant() {
        TailVariant::Pareto { alpha } => Ok(alpha),
        _ => Err(Error::domain(format!("u_rho and v_c are defined for Pareto laws, got {}", law.label()))),
    }
}

/// `u_ρ(t)` with the law's `α`.
pub fn u_rho(alpha: f64, rho: f64, t: f64) -> Result<f64> {
    let lll = logloglog(t)?;
    let inv = 1.0 / alpha;
    Ok((t * t.ln() * t.ln().ln()).powf(inv) * lll.powf(inv + rho))
}

/// `v_c(t)` with the law's `α`.
pub fn v_c(alpha: f64, c: f64, t: f64) -> Result<f64> {
    Ok(c * (t / loglog(t)?).powf(1.0 / alpha))
}

/// Selected `M(t)`.
pub fn m_quenched(law: &TailLaw, t: f64, mode: MMode) -> Result<f64> {
    let log_t = || -> Result<f64> {
        if !(t > 1.0 && t.is_finite()) {
            return Err(Error::domain(format!("log t needs finite t > 1, got {t}")));
        }
        Ok(t.ln())
    };
    match mode {
        MMode::LowerInv { eps } => law.g_inv((1.0 - eps) * log_t()?),
        MMode::UpperInv { eps } => law.g_inv((1.0 + eps) * log_t()?),
        MMode::Stable => law.g_inv(log_t()?),
        MMode::ParetoUpper { rho } => u_rho(pareto_alpha(law)?, rho, t),
        MMode::ParetoLower { c } => v_c(pareto_alpha(law)?, c, t),
    }
}

/// `(t/g⁻¹((1+ε) log t), t/g⁻¹((1-ε) log t), t/h(t))`: the predicted
/// scales of `-log P(X_t < vt)`, quenched lower and upper, and annealed.
pub fn predicted_exponents(law: &TailLaw, t: f64, eps: f64) -> Result<(f64, f64, f64)> {
    let lo = t / m_quenched(law, t, MMode::UpperInv { eps })?;
    let hi = t / m_quenched(law, t, MMode::LowerInv { eps })?;
    let ann = t / solve_h(law, t)?;
    Ok((lo, hi, ann))
}

/// One row of a rate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEval {
    pub t: f64,
    pub law: String,
    pub eps: f64,
    pub h: f64,
    pub m_lower: f64,
    pub m_stable: f64,
    pub m_upper: f64,
    pub u_rho: Option<f64>,
    pub v_c: Option<f64>,
    pub exp_quenched_lower: f64,
    pub exp_quenched_upper: f64,
    pub exp_annealed: f64,
    pub stability: Option<f64>,
}

pub const RATE_CSV_HEADER: &str = "t,law,eps,h,m_lower,m_stable,m_upper,u_rho,v_c,exp_quenched_lower,exp_quenched_upper,exp_annealed";

impl RateEval {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.law,
            self.eps,
            self.h,
            self.m_lower,
            self.m_stable,
            self.m_upper,
            opt(self.u_rho),
            opt(self.v_c),
            self.exp_quenched_lower,
            self.exp_quenched_upper,
            self.exp_annealed
        )
    }
}

/// All rate quantities at `t`. Pareto bands use `ρ` and `c` and are absent
/// below their domain guards.
pub fn rate_eval(law: &TailLaw, t: f64, eps: f64, rho: f64, c: f64) -> Result<RateEval> {
    let h = solve_h(law, t)?;
    let (m_lower, m_upper) = (m_quenched(law, t, MMode::LowerInv { eps })?, m_quenched(law, t, MMode::UpperInv { eps })?);
    let pareto = law.alpha().filter(|_| matches!(law.variant(), TailVariant::Pareto { .. }));
    Ok(RateEval {
        t,
        law: law.label(),
        eps,
        h,
        m_lower,
        m_stable: m_quenched(law, t, MMode::Stable)?,
        m_upper,
        u_rho: pareto.and_then(|a| u_rho(a, rho, t).ok()),
        v_c: pareto.and_then(|a| v_c(a, c, t).ok()),
        exp_quenched_lower: t / m_upper,
        exp_quenched_upper: t / m_lower,
        exp_annealed: t / h,
        stability: law.stability_index(),
    })
}

/// Band parameters of [`running_max_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxBands {
    pub eps: f64,
    /// Finite-`n` slack around the stability band.
    pub slack: f64,
    pub rho: f64,
    pub c: f64,
}

impl Default for MaxBands {
    fn default() -> Self {
        MaxBands { eps: 0.3, slack: 0.25, rho: 0.1, c: 0.5 }
    }
}

/// Fraction of trials whose maximum fell inside `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandFraction {
    pub lo: f64,
    pub hi: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningMaxReport {
    pub law: String,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    /// `[g⁻¹((1-ε) log n), g⁻¹((1+ε) log n)]`.
    pub eps_band: BandFraction,
    /// `[g⁻¹(log n)(1-slack)/l, l g⁻¹(log n)(1+slack)]` when `l` exists.
    pub stability_band: Option<BandFraction>,
    /// `[v_c(n), u_ρ(n)]` for Pareto laws, compared with the maximum of the
    /// raw (unscaled) variables.
    pub pareto_band: Option<BandFraction>,
}

/// Samples `trials` maxima of `n` i.i.d. holding-time means and reports the
/// fraction inside each band.
pub fn running_max_check(law: &TailLaw, n: u64, trials: u64, seed: u64, bands: MaxBands) -> Result<RunningMaxReport> {
    if n < 1000 {
        return Err(Error::domain(format!("running_max_check needs n >= 1000, got {n}")));
    }
    if trials == 0 {
        return Err(Error::config("trials must be >= 1"));
    }
    let nf = n as f64;
    let stream = derive_seed(seed, tags::TRIAL, n);
    let maxima: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(stream, i);
            (0..n).map(|_| law.sample_mu(&mut rng)).fold(0.0, f64::max)
        })
        .collect();
    let frac = |lo: f64, hi: f64, scale: f64| BandFraction {
        lo,
        hi,
        fraction: maxima.iter().filter(|&&m| lo <= m * scale && m * scale <= hi).count() as f64 / trials as f64,
    };
    let eps_band = frac(
        m_quenched(law, nf, MMode::LowerInv { eps: bands.eps })?,
        m_quenched(law, nf, MMode::UpperInv { eps: bands.eps })?,
        1.0,
    );
    let stability_band = match law.stability_index() {
        Some(l) => {
            let m = m_quenched(law, nf, MMode::Stable)?;
            Some(frac(m * (1.0 - bands.slack) / l, l * m * (1.0 + bands.slack), 1.0))
        }
        None => None,
    };
    let pareto_band = match law.variant() {
        TailVariant::Pareto { alpha } => Some(frac(v_c(alpha, bands.c, nf)?, u_rho(alpha, bands.rho, nf)?, law.scale_m())),
        _ => None,
    };
    Ok(RunningMaxReport { law: law.label(), n, trials, seed, eps_band, stability_band, pareto_band })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn laws() -> Vec<TailLaw> {
        vec![
            TailLaw::pareto(2.0).unwrap(),
            TailLaw::pareto(3.0).unwrap(),
            TailLaw::log_pow(2.0).unwrap(),
            TailLaw::log_log().unwrap(),
            TailLaw::weibull(0.5).unwrap(),
            TailLaw::weibull(1.0).unwrap(),
            TailLaw::weibull(2.0).unwrap(),
        ]
    }

    #[test]
    fn weibull_one_closed_form() {
        let law = TailLaw::weibull(1.0).unwrap();
        let t: f64 = 1e4;
        let closed = (t.ln() + (t.ln().powi(2) + 4.0 * t).sqrt()) / 2.0;
        let h = solve_h(&law, t).unwrap();
        assert!((h - closed).abs() < 1e-6 * closed);
        assert!((h - 104.7112).abs() < 1e-4);
        assert!((t / h - 95.50).abs() < 0.01);
        assert!((t / h - (h - t.ln())).abs() < 1e-5);
    }

    #[test]
    fn maximality_on_grid() {
        for law in laws() {
            for k in 0..30 {
                let t = 10f64.powf(3.0 + 9.0 * k as f64 / 29.0);
                let h = solve_h(&law, t).unwrap();
                assert!(phi(&law, t, h) >= 0.0, "{} t={t}", law.label());
                assert!(phi(&law, t, h * (1.0 + 1e-6)) < 0.0, "{} t={t}", law.label());
                assert!(h >= t.ln() && h <= t);
            }
        }
    }

    #[test]
    fn small_t_rejected() {
        let law = TailLaw::weibull(1.0).unwrap();
        assert!(solve_h(&law, 1.0).is_err());
        assert!(solve_h(&law, 0.5).is_err());
    }

    #[test]
    fn slack_holds() {
        assert!(check_h_slack(&TailLaw::weibull(1.0).unwrap(), 1e4).unwrap());
        assert!(check_h_slack(&TailLaw::pareto(2.0).unwrap(), 1e6).unwrap());
    }

    #[test]
    fn m_examples() {
        let w = TailLaw::weibull(1.0).unwrap();
        assert!((m_quenched(&w, 1e6, MMode::Stable).unwrap() - 13.815_510_557_964_274).abs() < 1e-9);
        let p = TailLaw::pareto(2.0).unwrap();
        let t = E.powf(E.powf(E));
        for rho in [0.0, 0.1, 0.7] {
            let u = m_quenched(&p, t, MMode::ParetoUpper { rho }).unwrap();
            assert!((u - (t * E.powf(E) * E).sqrt()).abs() < 1e-9 * u);
        }
        let v = m_quenched(&p, E.powf(E), MMode::ParetoLower { c: 0.5 }).unwrap();
        assert!((v - 0.5 * E.powf(E / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn domain_guards() {
        let p = TailLaw::pareto(2.0).unwrap();
        assert!(m_quenched(&p, 10.0, MMode::ParetoUpper { rho: 0.1 }).is_err());
        assert!(m_quenched(&p, 2.0, MMode::ParetoLower { c: 0.5 }).is_err());
        assert!(m_quenched(&TailLaw::weibull(1.0).unwrap(), 1e6, MMode::ParetoLower { c: 0.5 }).is_err());
        assert!(m_quenched(&p, 1.0, MMode::Stable).is_err());
    }

    #[test]
    fn exponents() {
        let w = TailLaw::weibull(1.0).unwrap();
        let (lo, hi, _) = predicted_exponents(&w, 1e6, 0.0).unwrap();
        assert!((lo - 72_382.4).abs() < 0.1 && (hi - lo).abs() < 1e-9);
        let (_, _, ann) = predicted_exponents(&w, 1e4, 0.1).unwrap();
        assert!((ann - 95.50).abs() < 0.01);
        for law in laws() {
            let mut prev = (0.0, 0.0, 0.0);
            for k in 0..20 {
                let t = 10f64.powf(4.0 + 0.4 * k as f64);
                let e = predicted_exponents(&law, t, 0.3).unwrap();
                assert!(e.0 > prev.0 && e.1 > prev.1 && e.2 > prev.2, "{} t={t}", law.label());
                prev = e;
            }
        }
    }

    #[test]
    fn m_modes_nondecreasing() {
        let p = TailLaw::pareto(2.0).unwrap();
        let modes = [
            MMode::LowerInv { eps: 0.3 },
            MMode::UpperInv { eps: 0.3 },
            MMode::Stable,
            MMode::ParetoUpper { rho: 0.1 },
            MMode::ParetoLower { c: 0.5 },
        ];
        for mode in modes {
            let vals: Vec<f64> =
                (0..40).map(|k| m_quenched(&p, 10f64.powf(2.0 + 0.25 * k as f64), mode).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[0] <= w[1]), "{mode:?}");
        }
    }

    #[test]
    fn running_max_rejects_small_n() {
        assert!(running_max_check(&TailLaw::weibull(1.0).unwrap(), 10, 5, 0, MaxBands::default()).is_err());
    }

    #[test]
    fn running_max_small_run() {
        let r = running_max_check(&TailLaw::weibull(1.0).unwrap(), 10_000, 50, 3, MaxBands::default()).unwrap();
        assert!(r.eps_band.fraction > 0.5);
        assert!(r.stability_band.is_some() && r.pareto_band.is_none());
        let again = running_max_check(&TailLaw::weibull(1.0).unwrap(), 10_000, 50, 3, MaxBands::default()).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn rate_row_columns() {
        let r = rate_eval(&TailLaw::pareto(2.0).unwrap(), 1e6, 0.3, 0.1, 0.5).unwrap();
        assert_eq!(r.csv_row().split(',').count(), RATE_CSV_HEADER.split(',').count());
        assert!(r.u_rho.is_some());
    }
}
