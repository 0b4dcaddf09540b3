//! Standard-normal and Student-t distribution functions.
//!
//! The t quantile is found by bisection on the regularized incomplete beta
//! representation of the tail, so it inherits the accuracy of the CDF.

use std::f64::consts::SQRT_2;

use statrs::function::beta::beta_reg;
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{AntacError, Result};

const QUANTILE_TOLERANCE: f64 = 1e-10;
const QUANTILE_MAX_ITER: usize = 200;

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn std_normal_quantile(prob: f64) -> Result<f64> {
    check_probability(prob)?;
    Ok(-SQRT_2 * erfc_inv(2.0 * prob))
}

/// Upper tail `P(T > x)` for `T ~ t(df)`.
pub fn student_t_sf(x: f64, df: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let half_tail = |t: f64| 0.5 * beta_reg(0.5 * df, 0.5, df / (df + t * t));
    if x >= 0.0 {
        half_tail(x)
    } else {
        1.0 - half_tail(x)
    }
}

pub fn student_t_cdf(x: f64, df: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let half_tail = 0.5 * beta_reg(0.5 * df, 0.5, df / (df + x * x));
    if x >= 0.0 {
        1.0 - half_tail
    } else {
        half_tail
    }
}

/// `x` with `P(T ≤ x) = prob` for `T ~ t(df)`.
pub fn student_t_quantile(prob: f64, df: f64) -> Result<f64> {
    check_probability(prob)?;
    if !(df > 0.0) || !df.is_finite() {
        return Err(AntacError::Domain(format!(
            "degrees of freedom must be positive, got {df}"
        )));
    }
    if prob == 0.5 {
        return Ok(0.0);
    }
    // Solve on the upper tail so probabilities near 1 keep their precision.
    let (tail, sign) = if prob > 0.5 {
        (1.0 - prob, 1.0)
    } else {
        (prob, -1.0)
    };
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while student_t_sf(hi, df) > tail {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(AntacError::Domain(format!(
                "t quantile for prob {prob} and df {df} overflows"
            )));
        }
    }
    for _ in 0..QUANTILE_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if student_t_sf(mid, df) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= QUANTILE_TOLERANCE * hi.max(1.0) {
            break;
        }
    }
    Ok(sign * 0.5 * (lo + hi))
}

fn check_probability(prob: f64) -> Result<()> {
    if prob > 0.0 && prob < 1.0 {
        Ok(())
    } else {
        Err(AntacError::Domain(format!(
            "probability must lie in (0, 1), got {prob}"
        )))
    }
}
