//! Small numerical helpers shared by the modules.

use std::f64::consts::PI;

use crate::error::{AsepError, Result};

/// `log sum exp(v_i)`, ignoring `-inf` entries.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `integral_0^pi f(theta) d theta` for `f` smooth, even and `2 pi`-periodic,
/// by the trapezoidal rule with doubling until the relative change is
/// below `tol`.
pub fn periodic_integral<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<f64> {
    let mut n = 64usize;
    let mut sum = 0.5 * (f(0.0) + f(PI)) + (1..n).map(|k| f(PI * k as f64 / n as f64)).sum::<f64>();
    let mut prev = sum * PI / n as f64;
    while n < (1 << 20) {
        sum += (0..n)
            .map(|k| f(PI * (2 * k + 1) as f64 / (2 * n) as f64))
            .sum::<f64>();
        n *= 2;
        let cur = sum * PI / n as f64;
        if (cur - prev).abs() <= tol * cur.abs().max(1e-300) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(AsepError::QuadratureFailure(format!(
        "periodic integral not converged with {n} intervals"
    )))
}

/// Maximizer of a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}
