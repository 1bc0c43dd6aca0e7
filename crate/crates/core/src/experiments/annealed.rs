//! Annealed slowdown: averaged quenched bounds, naive annealed Monte Carlo
//! and the planted-environment importance-sampling estimator.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{AnnealedConfig, ExperimentConfig};
use super::output::{cell, Record};
use super::quenched::{bracket_cell, environment_seed, neg_log};
use crate::asym::solve_h;
use crate::environment::{Environment, OmegaLaw};
use crate::error::{Error, Result};
use crate::laws::TailLaw;
use crate::rng::{derive_seed, replica_rng, tags};
use crate::sim::simulate_x;
use crate::stats::EstimateCI;

/// Fraction of replicas with `X_t < vt`, each on a fresh environment.
pub fn annealed_slowdown_naive(
    omega: OmegaLaw,
    law: TailLaw,
    t: f64,
    v: f64,
    replicas: u64,
    seed: u64,
) -> Result<EstimateCI> {
    omega.validate()?;
    if replicas == 0 {
        return Err(Error::config("replicas must be >= 1"));
    }
    let hits = (0..replicas)
        .into_par_iter()
        .map(|i| -> Result<bool> {
            let env = Environment::new(omega, law, environment_seed(seed, i))?;
            Ok((simulate_x(&env, t, &mut replica_rng(seed, i)).position as f64) < v * t)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&b| b)
        .count() as u64;
    Ok(EstimateCI::proportion(hits, replicas, seed))
}

/// Output of [`planted_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlantedEstimate {
    pub estimate: EstimateCI,
    /// Planting level.
    pub level: f64,
    /// Fraction of replicas drawn from the planted component.
    pub planted_fraction: f64,
    pub min_weight: f64,
    pub max_weight: f64,
}

/// Importance-sampling estimate of the annealed `P(X_t < vt)`.
///
/// With probability `beta` a replica plants a site `x*` uniform in
/// `[0, N-1]`, `N = ⌈vt⌉`, whose `μ` is drawn from the law conditioned on
/// `μ > level`; otherwise the environment is left untouched. The proposal
/// density relative to the environment law is
/// `(1-β) + β C / (N π)`, where `C` counts sites of `[0, N-1]` above the
/// level and `π = P(μ > level)`, and each replica is weighted by its
/// inverse. Weights are formed in log space.
#[allow(clippy::too_many_arguments)]
pub fn planted_estimate(
    omega: OmegaLaw,
    law: TailLaw,
    t: f64,
    v: f64,
    level: f64,
    beta: f64,
    replicas: u64,
    seed: u64,
) -> Result<PlantedEstimate> {
    omega.validate()?;
    if replicas == 0 {
        return Err(Error::config("replicas must be >= 1"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::config(format!("beta must lie in (0, 1), got {beta}")));
    }
    if !(v * t >= 1.0) {
        return Err(Error::domain(format!("planted estimator needs vt >= 1, got {}", v * t)));
    }
    let n = (v * t).ceil() as i64;
    let g_level = law.g_eval(level)?;
    let (ln_keep, ln_beta, ln_n) = ((1.0 - beta).ln(), beta.ln(), (n as f64).ln());
    let plant_seed = derive_seed(seed, tags::PLANT, 0);
    let samples: Vec<(f64, f64, bool)> = (0..replicas)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64, bool)> {
            let mut env = Environment::new(omega, law, environment_seed(seed, i))?;
            let mut rng = replica_rng(plant_seed, i);
            let planted = rng.random::<f64>() < beta;
            if planted {
                let x = rng.random_range(0..n);
                env.plant_mu(x, law.sample_mu_above(level, &mut rng))?;
            }
            let c = (0..n).filter(|&x| env.mu(x) > level).count();
            let ln_w = if c == 0 {
                -ln_keep
            } else {
                let b = ln_beta + (c as f64).ln() - ln_n + g_level;
                let m = ln_keep.max(b);
                -(m + ((ln_keep - m).exp() + (b - m).exp()).ln())
            };
            let w = ln_w.exp();
            let hit = (simulate_x(&env, t, &mut replica_rng(seed, i)).position as f64) < v * t;
            Ok((if hit { w } else { 0.0 }, w, planted))
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let min_weight = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let max_weight = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let planted_fraction = samples.iter().filter(|s| s.2).count() as f64 / replicas as f64;
    Ok(PlantedEstimate {
        estimate: EstimateCI::mean(&values, seed),
        level,
        planted_fraction,
        min_weight,
        max_weight,
    })
}

/// `exp{-t/h} (1 - (1 - π)^N)`: some site of `[0, N-1]` has `μ > h` and
/// its first holding time outlasts `t`. Returns the logarithm.
pub fn log_annealed_lower_bound(law: &TailLaw, t: f64, v: f64, h: f64) -> Result<f64> {
    let n = (v * t).ceil();
    let ln_pi = -law.g_eval(h)?;
    // 1 - (1 - π)^N = -expm1(N ln(1 - π))
    let hit = -(n * (-ln_pi.exp()).ln_1p()).exp_m1();
    let ln_hit = if hit > 0.0 { hit.ln() } else { n.ln() + ln_pi };
    Ok(-t / h + ln_hit)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealedRecord {
    pub t: f64,
    pub v: f64,
    pub v_p: f64,
    pub h: Option<f64>,
    /// `t / h(t)`.
    pub exp_annealed: Option<f64>,
    pub environments: u64,
    pub mean_lower: Option<f64>,
    pub mean_upper: Option<f64>,
    /// Mean oracle value over the environments where it was computed.
    pub mean_oracle: Option<f64>,
    pub oracle_count: u64,
    pub naive_mc: Option<EstimateCI>,
    pub planted: Option<PlantedEstimate>,
    pub annealed_lb: Option<f64>,
    pub neg_log_annealed_lb: Option<f64>,
    /// `2t/h + log(1/v) + log(e/(e-1))`.
    pub annealed_lb_cap: Option<f64>,
    /// `-log(planted) / (t/h)`.
    pub ratio_planted: Option<f64>,
    /// `(planted - naive) / joint standard error`.
    pub planted_naive_z: Option<f64>,
}

impl Record for AnnealedRecord {
    const KIND: &'static str = "annealed";

    fn csv_header() -> String {
        "t,v,h,exp_annealed,environments,mean_lower,mean_upper,mean_oracle,oracle_count,naive_estimate,naive_se,planted_estimate,planted_se,annealed_lb,neg_log_annealed_lb,annealed_lb_cap,ratio_planted,planted_naive_z".into()
    }

    fn csv_doc() -> &'static str {
        "annealed P(X_t < vt): averaged quenched bounds, naive and planted Monte Carlo; ratio_planted = -log(planted)/(t/h); empty cells are unavailable"
    }

    fn csv_row(&self) -> String {
        let naive = self.naive_mc.as_ref();
        let planted = self.planted.as_ref().map(|p| &p.estimate);
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.v,
            cell(self.h),
            cell(self.exp_annealed),
            self.environments,
            cell(self.mean_lower),
            cell(self.mean_upper),
            cell(self.mean_oracle),
            self.oracle_count,
            cell(naive.map(|m| m.estimate)),
            cell(naive.map(|m| m.std_error)),
            cell(planted.map(|m| m.estimate)),
            cell(planted.map(|m| m.std_error)),
            cell(self.annealed_lb),
            cell(self.neg_log_annealed_lb),
            cell(self.annealed_lb_cap),
            cell(self.ratio_planted),
            cell(self.planted_naive_z)
        )
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// One record per `t`.
pub fn run_annealed_experiment(cfg: &ExperimentConfig) -> Result<Vec<AnnealedRecord>> {
    let a: &AnnealedConfig = cfg
        .annealed
        .as_ref()
        .ok_or_else(|| Error::config("missing [annealed] section"))?;
    let law = cfg.tail_law()?;
    let omega = cfg.environment.omega;
    let v_p = omega.solomon_speed();
    let v = a.v_fraction * v_p;
    let mut out = Vec::with_capacity(a.t_grid.len());
    for (k, &t) in a.t_grid.iter().enumerate() {
        let k = k as u64;
        let cell_seed = derive_seed(cfg.seed, tags::WALK, k);
        let brackets: Vec<_> = (0..a.environments)
            .into_par_iter()
            .map(|i| {
                let env = Environment::new(omega, law, environment_seed(derive_seed(cfg.seed, tags::ENVIRONMENT, k), i))?;
                bracket_cell(&env, &law, t, a.v_fraction, &a.oracle, 0, 0, 0.3)
            })
            .collect::<Result<_>>()?;
        let lowers: Vec<f64> = brackets.iter().map(|r| r.bracket.lower).collect();
        let uppers: Vec<f64> = brackets.iter().map(|r| r.bracket.upper).collect();
        let oracles: Vec<f64> = brackets.iter().filter_map(|r| r.bracket.oracle).collect();
        let naive_mc = if a.mc_replicas > 0 {
            Some(annealed_slowdown_naive(omega, law, t, v, a.mc_replicas, derive_seed(cell_seed, tags::TRIAL, 0))?)
        } else {
            None
        };
        let h = solve_h(&law, t).ok();
        let planted = match h {
            Some(h) if a.planted_replicas > 0 && v * t >= 1.0 => Some(planted_estimate(
                omega,
                law,
                t,
                v,
                h,
                a.planted_beta,
                a.planted_replicas,
                derive_seed(cell_seed, tags::PLANT, 0),
            )?),
            _ => None,
        };
        let ln_lb = match h {
            Some(h) if v * t >= 1.0 => Some(log_annealed_lower_bound(&law, t, v, h)?),
            _ => None,
        };
        let e = std::f64::consts::E;
        let exp_annealed = h.map(|h| t / h);
        out.push(AnnealedRecord {
            t,
            v,
            v_p,
            h,
            exp_annealed,
            environments: a.environments,
            mean_lower: mean(&lowers),
            mean_upper: mean(&uppers),
            mean_oracle: mean(&oracles),
            oracle_count: oracles.len() as u64,
            naive_mc,
            planted,
            annealed_lb: ln_lb.map(f64::exp),
            neg_log_annealed_lb: ln_lb.map(|l| -l),
            annealed_lb_cap: h.map(|h| 2.0 * t / h + (1.0 / v).ln() + (e / (e - 1.0)).ln()),
            ratio_planted: match (&planted, exp_annealed) {
                (Some(p), Some(x)) => neg_log(p.estimate.estimate).map(|n| n / x),
                _ => None,
            },
            planted_naive_z: match (&planted, &naive_mc) {
                (Some(p), Some(n)) => {
                    let se = (p.estimate.std_error.powi(2) + n.std_error.powi(2)).sqrt();
                    (se > 0.0).then(|| (p.estimate.estimate - n.estimate) / se)
                }
                _ => None,
            },
        });
    }
    Ok(out)
}
