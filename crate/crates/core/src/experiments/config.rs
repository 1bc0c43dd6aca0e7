//! TOML experiment configuration.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::environment::OmegaLaw;
use crate::error::{Error, Result};
use crate::laws::{TailLaw, TailVariant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root of every random stream.
    pub seed: u64,
    pub environment: EnvironmentConfig,
    pub sample_env: Option<SampleEnvConfig>,
    pub speed: Option<SpeedConfig>,
    pub slowdown: Option<SlowdownConfig>,
    pub annealed: Option<AnnealedConfig>,
    pub asymptotics: Option<AsymptoticsConfig>,
    pub tail_check: Option<TailExperimentConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub omega: OmegaLaw,
    pub tail: TailVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleEnvConfig {
    pub lo: i64,
    pub hi: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedConfig {
    pub t: f64,
    pub replicas: u64,
    /// Fresh environment per replica.
    #[serde(default = "yes")]
    pub annealed: bool,
}

/// Quenched slowdown sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlowdownConfig {
    /// `v / v_P`.
    pub v_fraction: f64,
    pub t_grid: Vec<f64>,
    /// Number of environment seeds.
    pub environments: u64,
    /// Monte Carlo replicas per cell; 0 disables.
    #[serde(default)]
    pub mc_replicas: u64,
    #[serde(default)]
    pub oracle: OracleConfig,
    /// `ε` of the `M(t)` bands.
    #[serde(default = "default_rate_eps")]
    pub rate_eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub enabled: bool,
    pub tol: f64,
    pub max_sites: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { enabled: true, tol: 1e-8, max_sites: 200 }
    }
}

/// Annealed sweep with the planted estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealedConfig {
    pub v_fraction: f64,
    pub t_grid: Vec<f64>,
    /// Environments averaged for the quenched bounds.
    pub environments: u64,
    /// Naive annealed Monte Carlo replicas; 0 disables.
    #[serde(default)]
    pub mc_replicas: u64,
    pub planted_replicas: u64,
    /// Mixture weight of the planted proposal.
    #[serde(default = "default_beta")]
    pub planted_beta: f64,
    #[serde(default)]
    pub oracle: OracleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsConfig {
    pub t_grid: Vec<f64>,
    #[serde(default = "default_rate_eps")]
    pub eps: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_c")]
    pub c: f64,
    pub running_max: Option<RunningMaxConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunningMaxConfig {
    pub n: u64,
    pub trials: u64,
    #[serde(default = "default_slack")]
    pub slack: f64,
}

/// `P(Σ_{k ≤ n} w_k (μ_k - 1) > δ n)` over an `n` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailExperimentConfig {
    /// Law of the summands; defaults to the environment's tail law.
    pub tail: Option<TailVariant>,
    /// Weights cycled over `k`.
    pub weights: Vec<f64>,
    pub kappa: f64,
    pub delta: f64,
    pub n_grid: Vec<u64>,
    pub replicas: u64,
}

fn yes() -> bool {
    true
}

fn default_rate_eps() -> f64 {
    0.3
}

fn default_beta() -> f64 {
    0.5
}

fn default_rho() -> f64 {
    0.1
}

fn default_c() -> f64 {
    0.5
}

fn default_slack() -> f64 {
    0.25
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::config(format!("{name}: entries must be positive and finite")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

fn check_fraction(name: &str, f: f64) -> Result<()> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::config(format!("{name} must lie in (0, 1), got {f}")));
    }
    Ok(())
}

impl OracleConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) || self.max_sites < 3 {
            return Err(Error::config("oracle.tol must lie in (0, 1) and oracle.max_sites >= 3"));
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tail_law(&self) -> Result<TailLaw> {
        TailLaw::make_mean_one(self.environment.tail)
    }

    pub fn validate(&self) -> Result<()> {
        self.environment.omega.validate()?;
        self.tail_law()?;
        if let Some(s) = &self.sample_env {
            if s.lo > s.hi {
                return Err(Error::config("sample_env.lo must not exceed sample_env.hi"));
            }
        }
        if let Some(s) = &self.speed {
            if !(s.t >= 100.0 && s.t.is_finite()) || s.replicas == 0 {
                return Err(Error::config("speed needs t >= 100 and replicas >= 1"));
            }
        }
        if let Some(s) = &self.slowdown {
            check_fraction("slowdown.v_fraction", s.v_fraction)?;
            check_grid("slowdown.t_grid", &s.t_grid)?;
            check_fraction("slowdown.rate_eps", s.rate_eps)?;
            s.oracle.validate()?;
        }
        if let Some(a) = &self.annealed {
            check_fraction("annealed.v_fraction", a.v_fraction)?;
            check_grid("annealed.t_grid", &a.t_grid)?;
            check_fraction("annealed.planted_beta", a.planted_beta)?;
            a.oracle.validate()?;
        }
        if let Some(a) = &self.asymptotics {
            check_grid("asymptotics.t_grid", &a.t_grid)?;
            check_fraction("asymptotics.eps", a.eps)?;
            if let Some(r) = &a.running_max {
                if r.n < 1000 || r.trials == 0 {
                    return Err(Error::config("running_max needs n >= 1000 and trials >= 1"));
                }
            }
        }
        if let Some(tc) = &self.tail_check {
            if tc.weights.is_empty() || tc.weights.iter().any(|&w| !(0.0..=tc.kappa).contains(&w)) {
                return Err(Error::config("tail_check.weights must be non-empty and lie in [0, kappa]"));
            }
            check_fraction("tail_check.delta", tc.delta)?;
            let ns: Vec<f64> = tc.n_grid.iter().map(|&n| n as f64).collect();
            check_grid("tail_check.n_grid", &ns)?;
            if tc.replicas == 0 {
                return Err(Error::config("tail_check.replicas must be >= 1"));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Replaces every `t` grid in the file.
    pub fn override_t_grid(&mut self, grid: &[f64]) -> Result<()> {
        if let Some(s) = &mut self.slowdown {
            s.t_grid = grid.to_vec();
        }
        if let Some(a) = &mut self.annealed {
            a.t_grid = grid.to_vec();
        }
        if let Some(a) = &mut self.asymptotics {
            a.t_grid = grid.to_vec();
        }
        self.validate()
    }
}
