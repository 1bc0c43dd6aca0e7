//! Green functions of the rate-1 walk killed on leaving an interval.
//!
//! On `(a, b)` the killed generator is `I - P` restricted to the interior;
//! `G = (I - P)^{-1}` and each call is one tridiagonal solve.

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::numeric::thomas_positive;

/// Tridiagonal coefficients of `I - P` on the interior of `(a, b)`.
fn killed_generator(env: &Environment, a: i64, b: i64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = (b - a - 1) as usize;
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let w = env.omega(a + 1 + i as i64);
        lower[i] = -(1.0 - w);
        upper[i] = -w;
    }
    (lower, vec![1.0; n], upper)
}

fn check_interval(a: i64, b: i64) -> Result<()> {
    if b - a < 2 {
        return Err(Error::domain(format!("interval ({a}, {b}) has no interior sites")));
    }
    Ok(())
}

/// Column `G_{(a,b)}(·, y)` over the interior sites `a+1..b-1`.
pub fn green_column(env: &Environment, a: i64, b: i64, y: i64) -> Result<Vec<f64>> {
    check_interval(a, b)?;
    if !(a < y && y < b) {
        return Err(Error::domain(format!("target {y} outside ({a}, {b})")));
    }
    let (lower, diag, upper) = killed_generator(env, a, b);
    let mut rhs = vec![0.0; diag.len()];
    rhs[(y - a - 1) as usize] = 1.0;
    thomas_positive(&lower, &diag, &upper, &rhs).ok_or_else(|| Error::numeric("singular killed generator"))
}

/// Row `G_{(a,b)}(x, ·)` over the interior sites `a+1..b-1`, from the
/// transposed system.
pub fn green_row(env: &Environment, a: i64, b: i64, x: i64) -> Result<Vec<f64>> {
    check_interval(a, b)?;
    if !(a < x && x < b) {
        return Err(Error::domain(format!("start {x} outside ({a}, {b})")));
    }
    let (lower, diag, upper) = killed_generator(env, a, b);
    let n = diag.len();
    // transpose: sub-diagonal of row i is the super-diagonal of row i-1
    let mut t_lower = vec![0.0; n];
    let mut t_upper = vec![0.0; n];
    for i in 0..n {
        if i > 0 {
            t_lower[i] = upper[i - 1];
        }
        if i + 1 < n {
            t_upper[i] = lower[i + 1];
        }
    }
    let mut rhs = vec![0.0; n];
    rhs[(x - a - 1) as usize] = 1.0;
    thomas_positive(&t_lower, &diag, &t_upper, &rhs).ok_or_else(|| Error::numeric("singular killed generator"))
}

/// `G_{(a,b)}(x, y)`: expected time spent at `y` before leaving `(a, b)`
/// when started at `x`.
pub fn green_interval(env: &Environment, a: i64, b: i64, x: i64, y: i64) -> Result<f64> {
    if !(a < x && x < b) {
        return Err(Error::domain(format!("start {x} outside ({a}, {b})")));
    }
    Ok(green_column(env, a, b, y)?[(x - a - 1) as usize])
}

/// Expected exit times `E_x[H(a) ∧ H(b)]` over the interior.
pub fn exit_times(env: &Environment, a: i64, b: i64) -> Result<Vec<f64>> {
    check_interval(a, b)?;
    let (lower, diag, upper) = killed_generator(env, a, b);
    let rhs = vec![1.0; diag.len()];
    thomas_positive(&lower, &diag, &upper, &rhs).ok_or_else(|| Error::numeric("singular killed generator"))
}

/// Weights `c(y) = Σ_{x ∈ (y, right]} G_{(a,x)}(x-1, y)` for `y ∈ (a, right)`.
///
/// The transposed generators of the nested intervals `(a, x)` share their
/// forward elimination, and the rows `G_{(a,x)}(x-1, ·)` follow from it by a
/// one-term back substitution, so all weights come from one backward sweep.
pub fn weights_c(env: &Environment, a: i64, right: i64) -> Result<Vec<f64>> {
    if right <= a {
        return Err(Error::domain(format!("weights_c needs a < right, got ({a}, {right})")));
    }
    let m = (right - a - 1) as usize;
    if m == 0 {
        return Ok(Vec::new());
    }
    let omega: Vec<f64> = (0..m).map(|i| env.omega(a + 1 + i as i64)).collect();
    // pivots and ratios -c'_i = (1 - ω_{i+1}) / den_i
    let mut den = vec![0.0; m];
    let mut ratio = vec![0.0; m];
    let mut cprime = 0.0;
    for i in 0..m {
        den[i] = if i == 0 { 1.0 } else { 1.0 + omega[i - 1] * cprime };
        if !(den[i] > 0.0) {
            return Err(Error::numeric("non-positive pivot in nested Green elimination"));
        }
        if i + 1 < m {
            cprime = -(1.0 - omega[i + 1]) / den[i];
            ratio[i] = -cprime;
        }
    }
    let mut c = vec![0.0; m];
    let mut acc = 0.0;
    for i in (0..m).rev() {
        acc = 1.0 / den[i] + if i + 1 < m { ratio[i] * acc } else { 0.0 };
        c[i] = acc;
    }
    Ok(c)
}
