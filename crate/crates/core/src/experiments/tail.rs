//! Monte Carlo check of the weighted tail-sum estimate
//! `P(Σ_{k ≤ n} w_k (μ_k - 1) > δn)`.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use super::config::TailExperimentConfig;
use super::output::{cell, Record};
use crate::error::{Error, Result};
use crate::laws::{TailClass, TailLaw, TailVariant};
use crate::rng::{derive_seed, replica_rng, tags};
use crate::stats::{clopper_pearson_zero_upper, wilson, Z95};

/// Largest admissible max/min spread of `-log p̂ / g(δn)`.
pub const RATIO_BAND: f64 = 3.0;

/// Allowed excess of the fitted `log p̂` slope over `1 - α` for polynomial
/// tails.
pub const SLOPE_OFFSET: f64 = 0.25;

/// One `n` of the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRecord {
    pub law: String,
    pub n: u64,
    pub delta: f64,
    pub replicas: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub std_error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// No exceedance observed; `ci_hi` is the Clopper–Pearson bound.
    pub censored: bool,
    pub g_delta_n: f64,
    /// `-log p̂ / g(δn)`.
    pub ratio: Option<f64>,
    /// `C n^{1-α}` with `C` the smallest constant dominating every row.
    pub envelope: Option<f64>,
    pub seed: u64,
}

impl Record for TailRecord {
    const KIND: &'static str = "tail";

    fn csv_header() -> String {
        "law,n,delta,replicas,hits,p_hat,std_error,ci_lo,ci_hi,censored,g_delta_n,ratio,envelope,seed".into()
    }

    fn csv_doc() -> &'static str {
        "P(sum_k w_k (mu_k - 1) > delta n) per n; censored rows have zero hits and ci_hi is the Clopper-Pearson bound; ratio = -log(p_hat)/g(delta n); envelope = C n^(1-alpha) for polynomial tails"
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.law,
            self.n,
            self.delta,
            self.replicas,
            self.hits,
            self.p_hat,
            self.std_error,
            self.ci_lo,
            self.ci_hi,
            self.censored,
            self.g_delta_n,
            cell(self.ratio),
            cell(self.envelope),
            self.seed
        )
    }
}

/// Verdict over the whole grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailSummary {
    pub law: String,
    pub class: TailClass,
    /// Least-squares slope of `log p̂` against `log n` over uncensored rows.
    pub slope: Option<f64>,
    /// `max / min` of the ratio column.
    pub ratio_spread: Option<f64>,
    /// Fitted `C` of the polynomial envelope.
    pub envelope_c: Option<f64>,
    pub censored: u64,
    pub passed: bool,
}

/// Estimates the exceedance probability on every `n` of the grid.
pub fn run_tail_lemma_experiment(cfg: &TailExperimentConfig, law: &TailLaw, seed: u64) -> Result<Vec<TailRecord>> {
    if let TailVariant::Weibull { alpha } = law.variant() {
        if alpha >= 1.0 {
            return Err(Error::config(format!("tail check needs a Weibull exponent below 1, got {alpha}")));
        }
    }
    if cfg.weights.is_empty() || cfg.weights.iter().any(|&w| !(0.0..=cfg.kappa).contains(&w)) {
        return Err(Error::config("weights must be non-empty and lie in [0, kappa]"));
    }
    if cfg.replicas == 0 {
        return Err(Error::config("replicas must be >= 1"));
    }
    let mut out = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let n_seed = derive_seed(seed, tags::TRIAL, n);
        let level = cfg.delta * n as f64;
        let hits = (0..cfg.replicas)
            .into_par_iter()
            .filter(|&i| {
                let mut rng = replica_rng(n_seed, i);
                let mut s = 0.0;
                for k in 0..n as usize {
                    let e: f64 = rng.sample(Exp1);
                    s += cfg.weights[k % cfg.weights.len()] * (law.mu_from_exponential(e) - 1.0);
                }
                s > level
            })
            .count() as u64;
        let m = cfg.replicas;
        let p_hat = hits as f64 / m as f64;
        let censored = hits == 0;
        let (ci_lo, ci_hi) = if censored { (0.0, clopper_pearson_zero_upper(m)) } else { wilson(hits, m, Z95) };
        let g_delta_n = law.g_eval(level)?;
        out.push(TailRecord {
            law: law.label(),
            n,
            delta: cfg.delta,
            replicas: m,
            hits,
            p_hat,
            std_error: (p_hat * (1.0 - p_hat) / m as f64).sqrt(),
            ci_lo,
            ci_hi,
            censored,
            g_delta_n,
            ratio: (!censored && g_delta_n > 0.0).then(|| -p_hat.ln() / g_delta_n),
            envelope: None,
            seed: n_seed,
        });
    }
    if let (TailClass::Polynomial, Some(alpha)) = (law.class(), law.alpha()) {
        if let Some(c) = envelope_constant(&out, alpha) {
            for r in &mut out {
                r.envelope = Some(c * (r.n as f64).powf(1.0 - alpha));
            }
        }
    }
    Ok(out)
}

/// Smallest `C` with `p̂ ≤ C n^{1-α}` on every uncensored row.
fn envelope_constant(records: &[TailRecord], alpha: f64) -> Option<f64> {
    records
        .iter()
        .filter(|r| !r.censored)
        .map(|r| r.p_hat * (r.n as f64).powf(alpha - 1.0))
        .reduce(f64::max)
}

/// Checks the records against the expected shape for `law`.
///
/// Polynomial tails pass when every row sits below the fitted envelope
/// `C n^{1-α}` and the slope of `log p̂` against `log n` is at most
/// `1 - α + SLOPE_OFFSET`. Other classes pass when no row is censored and the
/// ratio spread is at most [`RATIO_BAND`].
pub fn summarize_tail(records: &[TailRecord], law: &TailLaw) -> TailSummary {
    let uncensored: Vec<&TailRecord> = records.iter().filter(|r| !r.censored).collect();
    let slope = (uncensored.len() >= 2).then(|| {
        let xs: Vec<f64> = uncensored.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = uncensored.iter().map(|r| r.p_hat.ln()).collect();
        let k = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    });
    let ratios: Vec<f64> = records.iter().filter_map(|r| r.ratio).collect();
    let ratio_spread = (!ratios.is_empty()).then(|| {
        let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        hi / lo
    });
    let censored = records.iter().filter(|r| r.censored).count() as u64;
    let envelope_c = law.alpha().filter(|_| law.class() == TailClass::Polynomial).and_then(|a| envelope_constant(records, a));
    let passed = match law.class() {
        TailClass::Polynomial => {
            let alpha = law.alpha().unwrap_or(f64::NAN);
            envelope_c.is_some_and(|c| records.iter().all(|r| r.p_hat * (r.n as f64).powf(alpha - 1.0) <= c))
                && slope.is_some_and(|s| s <= 1.0 - alpha + SLOPE_OFFSET)
        }
        _ => !records.is_empty() && censored == 0 && ratio_spread.is_some_and(|s| s <= RATIO_BAND),
    };
    TailSummary { law: law.label(), class: law.class(), slope, ratio_spread, envelope_c, censored, passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(weights: Vec<f64>, n_grid: Vec<u64>, replicas: u64) -> TailExperimentConfig {
        TailExperimentConfig { tail: None, weights, kappa: 1.0, delta: 0.5, n_grid, replicas }
    }

    #[test]
    fn zero_weights_never_exceed() {
        let law = TailLaw::weibull(0.5).unwrap();
        let r = run_tail_lemma_experiment(&cfg(vec![0.0], vec![5, 10], 500), &law, 1).unwrap();
        assert!(r.iter().all(|r| r.hits == 0 && r.censored && r.ci_hi > 0.0));
    }

    #[test]
    fn rejects_light_weibull_and_bad_weights() {
        assert!(run_tail_lemma_experiment(&cfg(vec![1.0], vec![5], 10), &TailLaw::weibull(1.0).unwrap(), 1).is_err());
        assert!(run_tail_lemma_experiment(&cfg(vec![2.0], vec![5], 10), &TailLaw::pareto(2.0).unwrap(), 1).is_err());
    }

    #[test]
    fn single_term_matches_tail() {
        // n = 1, w = 1: P(μ - 1 > δ) = P(μ > 1.5)
        let law = TailLaw::pareto(3.0).unwrap();
        let r = &run_tail_lemma_experiment(&cfg(vec![1.0], vec![1], 200_000), &law, 2).unwrap()[0];
        let exact = law.tail(1.5);
        assert!((r.p_hat - exact).abs() < 4.0 * r.std_error, "{} vs {exact}", r.p_hat);
    }

    #[test]
    fn reproducible() {
        let law = TailLaw::log_pow(2.0).unwrap();
        let c = cfg(vec![1.0, 0.5], vec![4, 8], 2000);
        assert_eq!(run_tail_lemma_experiment(&c, &law, 3).unwrap(), run_tail_lemma_experiment(&c, &law, 3).unwrap());
    }

    fn synthetic(n: u64, p_hat: f64) -> TailRecord {
        TailRecord {
            law: "pareto(2)".into(),
            n,
            delta: 0.5,
            replicas: 1,
            hits: 1,
            p_hat,
            std_error: 0.0,
            ci_lo: p_hat,
            ci_hi: p_hat,
            censored: false,
            g_delta_n: 0.0,
            ratio: None,
            envelope: None,
            seed: 0,
        }
    }

    #[test]
    fn polynomial_summary_checks_slope() {
        let law = TailLaw::pareto(2.0).unwrap();
        let fast: Vec<_> = [10, 20, 40, 80].iter().map(|&n| synthetic(n, 0.5 / n as f64)).collect();
        let s = summarize_tail(&fast, &law);
        assert!(s.passed && (s.slope.unwrap() + 1.0).abs() < 1e-12 && (s.envelope_c.unwrap() - 0.5).abs() < 1e-15);
        let slow: Vec<_> = [10, 20, 40, 80].iter().map(|&n| synthetic(n, 0.5 / (n as f64).sqrt())).collect();
        assert!(!summarize_tail(&slow, &law).passed);
    }
}
