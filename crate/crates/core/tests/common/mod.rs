//! Reference implementations shared by the integration tests. None of them
//! calls into the library.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Student-t CDF for integer degrees of freedom via the finite trigonometric
/// series of Abramowitz and Stegun 26.7.3/26.7.4.
pub fn t_cdf_oracle(t: f64, df: u32) -> f64 {
    let theta = (t.abs() / (df as f64).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let c2 = c * c;
    // P(|T| < |t|)
    let a = if df % 2 == 1 {
        if df == 1 {
            2.0 * theta / PI
        } else {
            let mut term = c;
            let mut sum = c;
            let mut k = 2;
            while k + 1 < df {
                term *= c2 * k as f64 / (k + 1) as f64;
                sum += term;
                k += 2;
            }
            2.0 / PI * (theta + s * sum)
        }
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1;
        while k + 1 < df {
            term *= c2 * k as f64 / (k + 1) as f64;
            sum += term;
            k += 2;
        }
        s * sum
    };
    if t >= 0.0 {
        0.5 + 0.5 * a
    } else {
        0.5 - 0.5 * a
    }
}

pub fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn t_quantile_oracle(p: f64, df: u32) -> f64 {
    bisect(|x| t_cdf_oracle(x, df), p, -1e4, 1e4)
}

/// `erf(x) = 2/√π · e^{−x²} Σ 2ⁿ x^{2n+1} / (2n+1)!!`, a series with positive terms.
pub fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut n = 0;
    while term.abs() > 1e-18 * sum.abs() {
        n += 1;
        term *= 2.0 * x * x / (2 * n + 1) as f64;
        sum += term;
    }
    2.0 / PI.sqrt() * (-x * x).exp() * sum
}

pub fn normal_cdf_oracle(x: f64) -> f64 {
    0.5 * (1.0 + erf_series(x / 2f64.sqrt()))
}
