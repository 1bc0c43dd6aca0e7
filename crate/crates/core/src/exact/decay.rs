//! Geometric decay constants at the homogeneous floor.

use serde::{Deserialize, Serialize};

use crate::environment::OmegaLaw;
use crate::error::{Error, Result};

/// Largest `θ` at which `E[exp{θ H(+1)}]` is finite for the homogeneous
/// rate-1 walk with right probability `p`.
pub fn mgf_pole(p: f64) -> f64 {
    1.0 - 2.0 * (p * (1.0 - p)).sqrt()
}

/// `E[exp{θ H(+1)}]` for the homogeneous rate-1 walk with right
/// probability `p ∈ (1/2, 1)`.
pub fn homogeneous_mgf(p: f64, theta: f64) -> Result<f64> {
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::domain(format!("p must lie in (1/2, 1), got {p}")));
    }
    if !theta.is_finite() || theta > mgf_pole(p) {
        return Err(Error::domain(format!("theta = {theta} beyond the pole {} for p = {p}", mgf_pole(p))));
    }
    let a = 1.0 - theta;
    let disc = (a * a - 4.0 * p * (1.0 - p)).max(0.0);
    // rationalised form avoids cancellation when θ is small
    Ok(2.0 * p / (a + disc.sqrt()))
}

/// Constants of the bound `P_x(H(y) < ∞) ≤ c₁ exp{-c₂ (x - y)}` and the
/// MGF excess `η(ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConstants {
    pub c1: f64,
    pub c2: f64,
    pub p_floor: f64,
}

impl DecayConstants {
    /// `η(ε) = E[exp{ε H(+1)}] - 1` at the floor.
    pub fn eta(&self, eps: f64) -> Result<f64> {
        Ok(homogeneous_mgf(self.p_floor, eps)? - 1.0)
    }

    pub fn hitting_bound(&self, gap: i64) -> f64 {
        self.c1 * (-self.c2 * gap as f64).exp()
    }
}

/// `c₂ = ln(p/(1-p))` and `c₁ = 1/(2p - 1)`, the Green diagonal of the
/// homogeneous walk on `Z`, at `p = essinf ω`.
pub fn decay_constants(law: &OmegaLaw) -> Result<DecayConstants> {
    law.validate()?;
    let p = law.essinf();
    Ok(DecayConstants { c1: 1.0 / (2.0 * p - 1.0), c2: (p / (1.0 - p)).ln(), p_floor: p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Environment;
    use crate::exact::hitting::hitting_prob_left;
    use crate::laws::TailLaw;

    #[test]
    fn mgf_at_zero_is_one() {
        for p in [0.55, 0.6, 0.75, 0.9, 0.99] {
            assert!((homogeneous_mgf(p, 0.0).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mgf_closed_form_value() {
        let v = homogeneous_mgf(0.75, 0.1).unwrap();
        assert!((v - (0.9 - 0.06f64.sqrt()) / 0.5).abs() < 1e-14);
        assert!((v - 1.310102).abs() < 1e-6);
    }

    #[test]
    fn mgf_satisfies_first_step_equation() {
        // M = (p + (1-p) M²) / (1 - θ)
        for &(p, th) in &[(0.75, 0.1), (0.6, 0.01), (0.9, 0.3)] {
            let m = homogeneous_mgf(p, th).unwrap();
            assert!(((p + (1.0 - p) * m * m) / (1.0 - th) - m).abs() < 1e-12);
        }
    }

    #[test]
    fn mgf_domain() {
        assert!(homogeneous_mgf(0.75, 0.2).is_err());
        assert!(homogeneous_mgf(0.75, mgf_pole(0.75)).is_ok());
        assert!(homogeneous_mgf(0.5, 0.0).is_err());
    }

    #[test]
    fn c2_at_three_quarters() {
        let d = decay_constants(&OmegaLaw::Deterministic { p: 0.75 }).unwrap();
        assert!((d.c2 - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn eta_increasing_to_zero() {
        let d = decay_constants(&OmegaLaw::Uniform { a: 0.75, b: 0.9 }).unwrap();
        let grid = [1e-4, 1e-3, 1e-2, 1e-1];
        let etas: Vec<f64> = grid.iter().map(|&e| d.eta(e).unwrap()).collect();
        assert!(etas.windows(2).all(|w| w[0] < w[1]));
        assert!(etas[0] > 0.0 && etas[0] < 1e-3);
        // the pole at the floor p = 0.6 sits near 0.0202
        let low = decay_constants(&OmegaLaw::Uniform { a: 0.6, b: 0.8 }).unwrap();
        assert!(low.eta(1e-2).is_ok() && low.eta(1e-1).is_err());
    }

    #[test]
    fn homogeneous_decay_is_exact() {
        let d = decay_constants(&OmegaLaw::Deterministic { p: 0.75 }).unwrap();
        let env = Environment::homogeneous(0.75, 1.0).unwrap();
        for gap in 0..30 {
            let p = hitting_prob_left(&env, gap, 0);
            assert!((p - (-d.c2 * gap as f64).exp()).abs() <= 1e-12 * p);
            assert!(p <= d.hitting_bound(gap));
        }
    }

    #[test]
    fn random_env_respects_bound() {
        let law = OmegaLaw::TwoPoint { p1: 0.6, p2: 0.9, q: 0.5 };
        let d = decay_constants(&law).unwrap();
        let env = Environment::new(law, TailLaw::pareto(2.0).unwrap(), 77).unwrap();
        for x in -10..10 {
            for gap in 0..40 {
                assert!(hitting_prob_left(&env, x, x - gap) <= d.hitting_bound(gap));
            }
        }
    }
}
