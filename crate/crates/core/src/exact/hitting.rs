//! Hitting probabilities and expected hitting times of the rate-1 walk.

use crate::environment::Environment;

/// Relative accuracy targeted by the truncated recursions.
const TRUNCATION_TOL: f64 = 1e-13;

/// Depth needed for a recursion contracting by `rho` per step to shrink an
/// initial error of `scale` below `TRUNCATION_TOL`.
fn truncation_depth(rho: f64, scale: f64) -> i64 {
    if rho <= 0.0 {
        return 1;
    }
    let d = ((TRUNCATION_TOL / scale.max(1e-300)).ln() / rho.ln()).ceil();
    d.max(1.0) as i64 + 2
}

/// Backtrack probabilities `q_z = P_z(H(z-1) < ∞)` for `z ∈ [from, to]`,
/// from the backward recursion `q_z = (1-ω_z) / (1 - ω_z q_{z+1})`
/// started at the homogeneous-floor value far to the right.
pub fn backtrack_probs(env: &Environment, from: i64, to: i64) -> Vec<f64> {
    if from > to {
        return Vec::new();
    }
    let rho_f = env.rho_floor();
    let sup = env.omega_law().esssup();
    let depth = truncation_depth(rho_f, 1.0 / ((1.0 - rho_f) * (1.0 - sup)));
    let mut q = rho_f;
    let top = to + depth;
    let mut out = vec![0.0; (to - from + 1) as usize];
    for z in (from..=top).rev() {
        let w = env.omega(z);
        q = (1.0 - w) / (1.0 - w * q);
        if z <= to {
            out[(z - from) as usize] = q;
        }
    }
    out
}

/// `log P_x(H(y) < ∞)` for `y ≤ x`.
pub fn log_hitting_prob_left(env: &Environment, x: i64, y: i64) -> f64 {
    assert!(y <= x, "hitting_prob_left requires y <= x");
    if y == x {
        return 0.0;
    }
    backtrack_probs(env, y + 1, x).iter().map(|q| q.ln()).sum()
}

/// `P_x(H(y) < ∞)` for `y ≤ x`: the product of backtrack probabilities
/// over `(y, x]`.
pub fn hitting_prob_left(env: &Environment, x: i64, y: i64) -> f64 {
    log_hitting_prob_left(env, x, y).exp()
}

/// Per-site crossing times `T_z = E_{z-1}[H(z)]` for `z ∈ [from, to]` via
/// `T_z = (1 + (1-ω_{z-1}) T_{z-1}) / ω_{z-1}`, started far to the left
/// inside the certified range `[1, 1/(2 p_floor - 1)]`.
pub fn crossing_times(env: &Environment, from: i64, to: i64) -> Vec<f64> {
    if from > to {
        return Vec::new();
    }
    let p = env.p_floor();
    let rho_f = env.rho_floor();
    let upper = 1.0 / (2.0 * p - 1.0);
    let spread = 0.5 * (upper - 1.0) / (1.0 - rho_f);
    let depth = truncation_depth(rho_f, spread / 1e-3);
    let mut t = 0.5 * (1.0 + upper);
    let mut out = Vec::with_capacity((to - from + 1) as usize);
    for z in (from - depth)..=to {
        let w = env.omega(z - 1);
        t = (1.0 + (1.0 - w) * t) / w;
        if z >= from {
            out.push(t);
        }
    }
    out
}

/// `E_x[H(y)]` for `y > x`, rate-1 walk.
pub fn expected_hitting_time_right(env: &Environment, x: i64, y: i64) -> f64 {
    assert!(y > x, "expected_hitting_time_right requires y > x");
    crossing_times(env, x + 1, y).iter().sum()
}
