//! Event-driven Monte Carlo for the holding-time walk `X` and for the
//! rate-1 walk `S` with its time change `A_μ`.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{Environment, Holding, OmegaLaw};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, replica_rng, tags};
use crate::stats::EstimateCI;

/// What to record along a path besides the final state.
#[derive(Debug, Clone, Default)]
pub struct Recording {
    /// Levels whose first hitting times are reported.
    pub levels: Vec<i64>,
    /// Record `A_μ` after each jump (time-change sampler only).
    pub a_mu: bool,
    /// Keep the last `ring` `(time, position)` jump events; 0 disables.
    pub ring: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub position: i64,
    pub jumps: u64,
    /// First hitting times of [`Recording::levels`], in the same order.
    pub hitting_times: Vec<Option<f64>>,
    /// `A_μ` at each jump of `S`.
    pub a_mu: Vec<f64>,
    pub ring: VecDeque<(f64, i64)>,
}

struct Recorder<'a> {
    rec: &'a Recording,
    out: SimOutcome,
}

impl<'a> Recorder<'a> {
    fn new(rec: &'a Recording) -> Self {
        let hitting_times = rec.levels.iter().map(|&l| if l == 0 { Some(0.0) } else { None }).collect();
        Recorder {
            rec,
            out: SimOutcome { position: 0, jumps: 0, hitting_times, a_mu: Vec::new(), ring: VecDeque::new() },
        }
    }

    #[inline]
    fn jump(&mut self, time: f64, x: i64) {
        self.out.jumps += 1;
        self.out.position = x;
        for (l, h) in self.rec.levels.iter().zip(self.out.hitting_times.iter_mut()) {
            if h.is_none() && *l == x {
                *h = Some(time);
            }
        }
        if self.rec.ring > 0 {
            if self.out.ring.len() == self.rec.ring {
                self.out.ring.pop_front();
            }
            self.out.ring.push_back((time, x));
        }
    }
}

/// `X_t` with holding time `μ(x)·Exp(1)` at `x` and a step to `x+1` with
/// probability `ω(x)`.
pub fn simulate_x<R: Rng + ?Sized>(env: &Environment, t: f64, rng: &mut R) -> SimOutcome {
    simulate_x_with(env, t, rng, &Recording::default())
}

pub fn simulate_x_with<R: Rng + ?Sized>(env: &Environment, t: f64, rng: &mut R, rec: &Recording) -> SimOutcome {
    let mut r = Recorder::new(rec);
    let (mut x, mut time) = (0i64, 0.0);
    loop {
        let (w, m) = env.get(x);
        let e: f64 = rng.sample(Exp1);
        time += m * e;
        if time > t {
            break;
        }
        x += if rng.random::<f64>() < w { 1 } else { -1 };
        r.jump(time, x);
    }
    r.out
}

/// Runs the rate-1 walk `S`, accumulating `A_μ(s) = ∫₀^s μ(S_r) dr`, and
/// returns `S` at the first time `A_μ` exceeds `t`. Hitting times in the
/// outcome are on the `A_μ` clock.
pub fn simulate_timechange<R: Rng + ?Sized>(env: &Environment, t: f64, rng: &mut R) -> SimOutcome {
    simulate_timechange_with(env, t, rng, &Recording::default())
}

pub fn simulate_timechange_with<R: Rng + ?Sized>(
    env: &Environment,
    t: f64,
    rng: &mut R,
    rec: &Recording,
) -> SimOutcome {
    let mut r = Recorder::new(rec);
    let (mut s, mut a) = (0i64, 0.0);
    loop {
        let (w, m) = env.get(s);
        let dt: f64 = rng.sample(Exp1);
        let da = m * dt;
        if a + da > t {
            break;
        }
        a += da;
        s += if rng.random::<f64>() < w { 1 } else { -1 };
        if rec.a_mu {
            r.out.a_mu.push(a);
        }
        r.jump(a, s);
    }
    r.out
}

/// `H(y)` for the rate-1 walk started at `0`, `y > 0`.
pub fn simulate_hitting_time_s<R: Rng + ?Sized>(env: &Environment, y: i64, rng: &mut R) -> f64 {
    assert!(y > 0, "target must be to the right of the origin");
    let (mut s, mut time) = (0i64, 0.0);
    while s < y {
        let e: f64 = rng.sample(Exp1);
        time += e;
        s += if rng.random::<f64>() < env.omega(s) { 1 } else { -1 };
    }
    time
}

/// Copy of `env` with every site the walk is likely to visit by time `t`
/// realized, so replicas read from memory.
fn prepared(env: &Environment, t: f64) -> Environment {
    let mut e = env.clone();
    let reach = t.min(1e7).ceil() as i64;
    e.extend(-64, reach + 64);
    e
}

/// Fraction of replicas with `X_t < vt`, Wilson interval. Replica `i`
/// uses the stream `(seed, i)`.
pub fn estimate_slowdown(env: &Environment, t: f64, v: f64, replicas: u64, seed: u64) -> Result<EstimateCI> {
    if replicas == 0 {
        return Err(Error::config("replicas must be >= 1"));
    }
    let env = prepared(env, t);
    let threshold = v * t;
    let hits = (0..replicas)
        .into_par_iter()
        .filter(|&i| (simulate_x(&env, t, &mut replica_rng(seed, i)).position as f64) < threshold)
        .count() as u64;
    Ok(EstimateCI::proportion(hits, replicas, seed))
}

/// Environment source for [`estimate_speed`].
#[derive(Debug, Clone, Copy)]
pub enum SpeedMode<'a> {
    /// One fixed environment.
    Quenched(&'a Environment),
    /// A fresh environment per replica, seeded from `(seed, ENVIRONMENT, i)`.
    Annealed { omega_law: OmegaLaw, holding: Holding },
}

/// Mean of `X_t / t` over replicas.
pub fn estimate_speed(mode: SpeedMode<'_>, t: f64, replicas: u64, seed: u64) -> Result<EstimateCI> {
    if replicas == 0 {
        return Err(Error::config("replicas must be >= 1"));
    }
    if !(t > 0.0) {
        return Err(Error::domain(format!("t must be positive, got {t}")));
    }
    let values: Vec<f64> = match mode {
        SpeedMode::Quenched(env) => {
            let env = prepared(env, t);
            (0..replicas)
                .into_par_iter()
                .map(|i| simulate_x(&env, t, &mut replica_rng(seed, i)).position as f64 / t)
                .collect()
        }
        SpeedMode::Annealed { omega_law, holding } => {
            Environment::with_holding(omega_law, holding, 0)?;
            (0..replicas)
                .into_par_iter()
                .map(|i| {
                    let env_seed = derive_seed(seed, tags::ENVIRONMENT, i);
                    let env = Environment::with_holding(omega_law, holding, env_seed).expect("validated above");
                    simulate_x(&env, t, &mut replica_rng(seed, i)).position as f64 / t
                })
                .collect()
        }
    };
    Ok(EstimateCI::mean(&values, seed))
}

/// Sampling scheme for [`estimate_hitting_mgf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MgfSampler {
    /// Plain average of `exp{θ H(+1)}`.
    Naive,
    /// Steps drawn with right probability `proposal`, holding times from
    /// `Exp(1-θ)`, reweighted by the likelihood ratio. Keeps the variance
    /// finite when the plain average has none.
    Tilted { proposal: f64 },
}

/// Monte Carlo estimate of `E[exp{θ H(+1)}]` for the homogeneous rate-1
/// walk with right probability `p`.
pub fn estimate_hitting_mgf(p: f64, theta: f64, sampler: MgfSampler, replicas: u64, seed: u64) -> Result<EstimateCI> {
    if !(p > 0.5 && p < 1.0) || !(theta < 1.0) {
        return Err(Error::domain(format!("need p in (1/2, 1) and theta < 1, got p = {p}, theta = {theta}")));
    }
    let (q, rate) = match sampler {
        MgfSampler::Naive => (p, 1.0),
        MgfSampler::Tilted { proposal } => {
            if !(proposal > 0.5 && proposal < 1.0) {
                return Err(Error::domain(format!("proposal must lie in (1/2, 1), got {proposal}")));
            }
            (proposal, 1.0 - theta)
        }
    };
    let (log_up, log_down) = ((p / q).ln(), ((1.0 - p) / (1.0 - q)).ln());
    let values: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i);
            let (mut s, mut log_w) = (0i64, 0.0);
            while s < 1 {
                let e: f64 = rng.sample::<f64, _>(Exp1) / rate;
                // e^{θe} times the density ratio of Exp(1) to Exp(rate)
                log_w += theta * e - e + rate * e - rate.ln();
                if rng.random::<f64>() < q {
                    s += 1;
                    log_w += log_up;
                } else {
                    s -= 1;
                    log_w += log_down;
                }
            }
            log_w.exp()
        })
        .collect();
    Ok(EstimateCI::mean(&values, seed))
}
