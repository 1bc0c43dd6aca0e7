//! End-to-end studies driven by a TOML configuration, with versioned
//! CSV/JSONL persistence.

mod annealed;
mod config;
mod output;
mod quenched;
mod tail;

pub use annealed::{
    annealed_slowdown_naive, log_annealed_lower_bound, planted_estimate, run_annealed_experiment, AnnealedRecord,
    PlantedEstimate,
};
pub use config::{
    AnnealedConfig, AsymptoticsConfig, EnvironmentConfig, ExperimentConfig, OracleConfig, RunningMaxConfig,
    SampleEnvConfig, SlowdownConfig, SpeedConfig, TailExperimentConfig,
};
pub use output::{csv_text, jsonl_line, write_records, Format, Record, SCHEMA_VERSION, TOOLKIT_VERSION};
pub use quenched::{bracket_cell, environment_seed, run_quenched_experiment, walk_seed, QuenchedRecord};
pub use tail::{run_tail_lemma_experiment, summarize_tail, TailRecord, TailSummary, RATIO_BAND, SLOPE_OFFSET};

use output::cell;
use serde::Serialize;

use crate::asym::{rate_eval, running_max_check, MaxBands, RateEval, RunningMaxReport, RATE_CSV_HEADER};
use crate::environment::{Environment, Holding};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, tags};
use crate::sim::{estimate_speed, SpeedMode};
use crate::stats::EstimateCI;

/// One lattice site of a sampled environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiteRecord {
    pub x: i64,
    pub omega: f64,
    pub mu: f64,
}

impl Record for SiteRecord {
    const KIND: &'static str = "site";

    fn csv_header() -> String {
        "x,omega,mu".into()
    }

    fn csv_doc() -> &'static str {
        "x: site, omega: right-jump probability, mu: mean holding time"
    }

    fn csv_row(&self) -> String {
        format!("{},{},{}", self.x, self.omega, self.mu)
    }
}

/// Sites `lo..=hi` of the environment seeded by the master seed.
pub fn run_sample_env(cfg: &ExperimentConfig) -> Result<Vec<SiteRecord>> {
    let s = cfg.sample_env.ok_or_else(|| Error::config("missing [sample_env] section"))?;
    let mut env = Environment::new(cfg.environment.omega, cfg.tail_law()?, environment_seed(cfg.seed, 0))?;
    env.extend(s.lo, s.hi + 1);
    Ok((s.lo..=s.hi)
        .map(|x| {
            let (omega, mu) = env.get(x);
            SiteRecord { x, omega, mu }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedRecord {
    pub t: f64,
    pub annealed: bool,
    pub v_p: f64,
    pub speed: EstimateCI,
    /// `(estimate - v_P) / standard error`.
    pub z: Option<f64>,
}

impl Record for SpeedRecord {
    const KIND: &'static str = "speed";

    fn csv_header() -> String {
        "t,annealed,v_p,estimate,ci_lo,ci_hi,std_error,replicas,seed,z".into()
    }

    fn csv_doc() -> &'static str {
        "mean of X_t/t over replicas against the speed v_p; z = (estimate - v_p)/std_error"
    }

    fn csv_row(&self) -> String {
        let s = &self.speed;
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.annealed,
            self.v_p,
            s.estimate,
            s.ci_lo,
            s.ci_hi,
            s.std_error,
            s.replicas,
            s.seed,
            cell(self.z)
        )
    }
}

pub fn run_speed(cfg: &ExperimentConfig) -> Result<Vec<SpeedRecord>> {
    let s = cfg.speed.ok_or_else(|| Error::config("missing [speed] section"))?;
    let law = cfg.tail_law()?;
    let omega = cfg.environment.omega;
    let seed = derive_seed(cfg.seed, tags::WALK, 0);
    let speed = if s.annealed {
        estimate_speed(SpeedMode::Annealed { omega_law: omega, holding: Holding::Law(law) }, s.t, s.replicas, seed)?
    } else {
        let env = Environment::new(omega, law, environment_seed(cfg.seed, 0))?;
        estimate_speed(SpeedMode::Quenched(&env), s.t, s.replicas, seed)?
    };
    let v_p = omega.solomon_speed();
    Ok(vec![SpeedRecord {
        t: s.t,
        annealed: s.annealed,
        v_p,
        z: (speed.std_error > 0.0).then(|| (speed.estimate - v_p) / speed.std_error),
        speed,
    }])
}

impl Record for RateEval {
    const KIND: &'static str = "rate";

    fn csv_header() -> String {
        RATE_CSV_HEADER.into()
    }

    fn csv_doc() -> &'static str {
        "h(t), the M(t) variants and the predicted exponents t/M and t/h; u_rho and v_c only for polynomial tails"
    }

    fn csv_row(&self) -> String {
        RateEval::csv_row(self)
    }
}

impl Record for RunningMaxReport {
    const KIND: &'static str = "running_max";

    fn csv_header() -> String {
        "law,n,trials,seed,eps_lo,eps_hi,eps_fraction,stab_lo,stab_hi,stab_fraction,pareto_lo,pareto_hi,pareto_fraction".into()
    }

    fn csv_doc() -> &'static str {
        "fraction of trials whose running maximum falls inside each band; empty cells are bands that do not apply"
    }

    fn csv_row(&self) -> String {
        let band = |b: Option<crate::asym::BandFraction>| match b {
            Some(b) => format!("{},{},{}", b.lo, b.hi, b.fraction),
            None => ",,".into(),
        };
        format!(
            "{},{},{},{},{},{},{}",
            self.law,
            self.n,
            self.trials,
            self.seed,
            band(Some(self.eps_band)),
            band(self.stability_band),
            band(self.pareto_band)
        )
    }
}

/// Rate table over the `t` grid plus the optional running-maximum check.
pub fn run_asymptotics(cfg: &ExperimentConfig) -> Result<(Vec<RateEval>, Option<RunningMaxReport>)> {
    let a = cfg.asymptotics.as_ref().ok_or_else(|| Error::config("missing [asymptotics] section"))?;
    let law = cfg.tail_law()?;
    let rates = a.t_grid.iter().map(|&t| rate_eval(&law, t, a.eps, a.rho, a.c)).collect::<Result<_>>()?;
    let max = match a.running_max {
        Some(r) => {
            let bands = MaxBands { eps: a.eps, slack: r.slack, rho: a.rho, c: a.c };
            Some(running_max_check(&law, r.n, r.trials, derive_seed(cfg.seed, tags::TRIAL, 0), bands)?)
        }
        None => None,
    };
    Ok((rates, max))
}

/// Tail-sum records and their summary.
pub fn run_tail_check(cfg: &ExperimentConfig) -> Result<(Vec<TailRecord>, TailSummary)> {
    let tc = cfg.tail_check.as_ref().ok_or_else(|| Error::config("missing [tail_check] section"))?;
    let law = match tc.tail {
        Some(v) => crate::laws::TailLaw::make_mean_one(v)?,
        None => cfg.tail_law()?,
    };
    let records = run_tail_lemma_experiment(tc, &law, cfg.seed)?;
    let summary = summarize_tail(&records, &law);
    Ok((records, summary))
}

/// One named check of [`run_validation`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub config_hash: String,
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

/// Sandwich suite on the `[slowdown]` section: every record must carry an
/// oracle value lying between its lower and upper bounds up to the oracle
/// tolerance.
pub fn run_validation(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    let s = cfg.slowdown.as_ref().ok_or_else(|| Error::config("validation needs a [slowdown] section"))?;
    let records = run_quenched_experiment(cfg)?;
    let checks = records
        .iter()
        .map(|r| {
            let b = &r.bracket;
            let passed = b.oracle.is_some() && b.lower <= b.upper && b.is_consistent(s.oracle.tol);
            ValidationCheck {
                name: format!("sandwich env={} t={}", r.env_index, r.t),
                passed,
                detail: match (&b.oracle, &r.oracle_skipped) {
                    (Some(o), _) => format!("{} <= {} <= {}", b.lower, o, b.upper),
                    (None, Some(why)) => format!("no oracle: {why}"),
                    (None, None) => "oracle disabled".into(),
                },
            }
        })
        .collect();
    Ok(ValidationReport { config_hash: cfg.hash(), checks })
}
