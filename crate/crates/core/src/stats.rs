//! Interval estimates and goodness-of-fit tests used by the estimators and
//! the validation suites.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Point estimate with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateCI {
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Standard error of the point estimate.
    pub std_error: f64,
    pub replicas: u64,
    pub seed: u64,
}

impl EstimateCI {
    /// Binomial proportion with a Wilson score interval.
    pub fn proportion(hits: u64, n: u64, seed: u64) -> Self {
        let (lo, hi) = wilson(hits, n, Z95);
        let p = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        let se = if n == 0 { 0.0 } else { (p * (1.0 - p) / n as f64).sqrt() };
        EstimateCI { estimate: p, ci_lo: lo, ci_hi: hi, std_error: se, replicas: n, seed }
    }

    /// Sample mean with a normal interval.
    pub fn mean(values: &[f64], seed: u64) -> Self {
        let (m, se) = mean_se(values);
        EstimateCI {
            estimate: m,
            ci_lo: m - Z95 * se,
            ci_hi: m + Z95 * se,
            std_error: se,
            replicas: values.len() as u64,
            seed,
        }
    }

    pub fn width(&self) -> f64 {
        self.ci_hi - self.ci_lo
    }

    /// CSV row `t,v,estimate,ci_lo,ci_hi,replicas,seed`.
    pub fn csv_row(&self, t: f64, v: f64) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            t, v, self.estimate, self.ci_lo, self.ci_hi, self.replicas, self.seed
        )
    }
}

pub const ESTIMATE_CSV_HEADER: &str = "t,v,estimate,ci_lo,ci_hi,replicas,seed";

/// Wilson score interval for `hits` successes out of `n`.
pub fn wilson(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = hits as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Clopper–Pearson 95% upper bound for zero successes in `n` trials.
pub fn clopper_pearson_zero_upper(n: u64) -> f64 {
    if n == 0 {
        1.0
    } else {
        1.0 - 0.025f64.powf(1.0 / n as f64)
    }
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (m, 0.0);
    }
    let var = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
///
/// Ties are handled by advancing both samples past equal values, so the
/// statistic is exact for discrete data; the asymptotic p-value is then
/// conservative.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(|p, q| p.total_cmp(q));
    y.sort_by(|p, q| p.total_cmp(q));
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_q(lambda))
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson chi-square goodness of fit of `counts` against probabilities
/// `probs`. Cells with expected count below 5 are pooled into neighbours.
/// Returns `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> (f64, usize, f64) {
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        obs += c as f64;
        exp += p * n;
        if exp >= 5.0 {
            pooled.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if obs > 0.0 || exp > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => pooled.push((obs, exp)),
        }
    }
    let stat: f64 = pooled.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = pooled.len().saturating_sub(1).max(1);
    let p = 1.0 - ChiSquared::new(dof as f64).map(|d| d.cdf(stat)).unwrap_or(0.0);
    (stat, dof, p)
}
