//! Quenched slowdown brackets over environment seeds and a `t` sweep.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, OracleConfig, SlowdownConfig};
use super::output::{cell, Record};
use crate::asym::{m_quenched, solve_h, MMode};
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::exact::{
    oracle_window, slowdown_lower_bound, uniformization_slowdown, upper_bound_terms, BoundBracket, SlowdownQuery,
};
use crate::laws::TailLaw;
use crate::rng::{derive_seed, tags};
use crate::sim::estimate_slowdown;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuenchedRecord {
    pub env_index: u64,
    pub env_seed: u64,
    pub t: f64,
    pub v: f64,
    pub v_p: f64,
    pub query: SlowdownQuery,
    pub bracket: BoundBracket,
    /// Optimal Chebyshev multiplier.
    pub lambda_star: f64,
    pub oracle_window: Option<(i64, i64)>,
    /// Why the oracle was not computed.
    pub oracle_skipped: Option<String>,
    /// `t / g⁻¹((1+ε) log t)`.
    pub exp_quenched_lower: f64,
    /// `t / g⁻¹((1-ε) log t)`.
    pub exp_quenched_upper: f64,
    /// `t / h(t)`, absent when `h` is undefined at this `t`.
    pub exp_annealed: Option<f64>,
    /// `-log(lower) / exp_quenched_upper`.
    pub ratio_lower: Option<f64>,
    /// `-log(upper) / exp_quenched_lower`.
    pub ratio_upper: Option<f64>,
    /// `(oracle - MC) / MC standard error`.
    pub oracle_mc_z: Option<f64>,
}

impl Record for QuenchedRecord {
    const KIND: &'static str = "quenched";

    fn csv_header() -> String {
        format!(
            "env_index,env_seed,t,v,u,eps,delta,{},lambda_star,exp_quenched_lower,exp_quenched_upper,exp_annealed,ratio_lower,ratio_upper,oracle_mc_z",
            crate::exact::BRACKET_CSV_HEADER
        )
    }

    fn csv_doc() -> &'static str {
        "bounds on P(X_t < vt) per environment seed; exp_* are predicted -log scales; ratio_* = -log(bound)/exponent; empty cells are unavailable"
    }

    fn csv_row(&self) -> String {
        let q = &self.query;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.env_index,
            self.env_seed,
            self.t,
            self.v,
            q.u,
            q.eps,
            q.delta,
            self.bracket.csv_row(),
            self.lambda_star,
            self.exp_quenched_lower,
            self.exp_quenched_upper,
            cell(self.exp_annealed),
            cell(self.ratio_lower),
            cell(self.ratio_upper),
            cell(self.oracle_mc_z)
        )
    }
}

/// `-log(p)` when `p ∈ (0, 1)`.
pub(crate) fn neg_log(p: f64) -> Option<f64> {
    (p > 0.0 && p < 1.0).then(|| -p.ln())
}

/// Bounds, optional oracle and optional Monte Carlo estimate at one
/// `(environment, t)` cell.
#[allow(clippy::too_many_arguments)]
pub fn bracket_cell(
    env: &Environment,
    law: &TailLaw,
    t: f64,
    v_fraction: f64,
    oracle: &OracleConfig,
    mc_replicas: u64,
    mc_seed: u64,
    rate_eps: f64,
) -> Result<QuenchedRecord> {
    let v_p = env.omega_law().solomon_speed();
    let v = v_fraction * v_p;
    let query = SlowdownQuery::with_defaults(t, v, v_p)?;
    let lower = if v * t >= 1.0 { slowdown_lower_bound(env, t, v)? } else { 0.0 };
    let terms = upper_bound_terms(env, &query)?;
    let upper = terms.total();

    let (mut oracle_value, mut window, mut skipped) = (None, None, None);
    if oracle.enabled {
        match oracle_window(env, t, oracle.tol, oracle.max_sites)
            .and_then(|w| uniformization_slowdown(env, t, query.threshold(), w, oracle.tol).map(|p| (w, p)))
        {
            Ok((w, p)) => {
                window = Some(w);
                oracle_value = Some(p);
            }
            Err(e) => {
                log::info!("oracle skipped at t = {t}, env seed {}: {e}", env.seed());
                skipped = Some(e.to_string());
            }
        }
    }
    let monte_carlo = if mc_replicas > 0 { Some(estimate_slowdown(env, t, v, mc_replicas, mc_seed)?) } else { None };
    let exp_lower = t / m_quenched(law, t, MMode::UpperInv { eps: rate_eps })?;
    let exp_upper = t / m_quenched(law, t, MMode::LowerInv { eps: rate_eps })?;
    let oracle_mc_z = match (oracle_value, &monte_carlo) {
        (Some(o), Some(mc)) if mc.std_error > 0.0 => Some((o - mc.estimate) / mc.std_error),
        _ => None,
    };
    Ok(QuenchedRecord {
        env_index: 0,
        env_seed: env.seed(),
        t,
        v,
        v_p,
        query,
        bracket: BoundBracket { lower, upper, oracle: oracle_value, monte_carlo },
        lambda_star: terms.chebyshev.lambda,
        oracle_window: window,
        oracle_skipped: skipped,
        exp_quenched_lower: exp_lower,
        exp_quenched_upper: exp_upper,
        exp_annealed: solve_h(law, t).ok().map(|h| t / h),
        ratio_lower: neg_log(lower).map(|x| x / exp_upper),
        ratio_upper: neg_log(upper).map(|x| x / exp_lower),
        oracle_mc_z,
    })
}

/// Environment seed for index `i`.
pub fn environment_seed(master: u64, i: u64) -> u64 {
    derive_seed(master, tags::ENVIRONMENT, i)
}

/// Monte Carlo seed for cell `(i, k)`.
pub fn walk_seed(master: u64, i: u64, k: u64) -> u64 {
    derive_seed(derive_seed(master, tags::WALK, i), tags::WALK, k)
}

/// One record per `(environment, t)`, ordered by environment then `t`.
pub fn run_quenched_experiment(cfg: &ExperimentConfig) -> Result<Vec<QuenchedRecord>> {
    let s: &SlowdownConfig = cfg
        .slowdown
        .as_ref()
        .ok_or_else(|| Error::config("missing [slowdown] section"))?;
    let law = cfg.tail_law()?;
    let cells: Vec<(u64, usize)> =
        (0..s.environments).flat_map(|i| (0..s.t_grid.len()).map(move |k| (i, k))).collect();
    cells
        .par_iter()
        .map(|&(i, k)| {
            let env = Environment::new(cfg.environment.omega, law, environment_seed(cfg.seed, i))?;
            let mut r = bracket_cell(
                &env,
                &law,
                s.t_grid[k],
                s.v_fraction,
                &s.oracle,
                s.mc_replicas,
                walk_seed(cfg.seed, i, k as u64),
                s.rate_eps,
            )?;
            r.env_index = i;
            Ok(r)
        })
        .collect()
}
