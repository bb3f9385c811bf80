//! Large deviations of the particle density `(1/N) sum_j tau_j`.
//!
//! The scaled cumulant generating function is `Lambda = L(lambda) - L(0)`
//! with `L` piecewise in `e^lambda` against `C^2` and `1/A^2`; the rate
//! function is its Legendre transform and has a closed form.

use serde::Serialize;

use crate::ansatz::count_gf_poly;
use crate::error::{AsepError, Result};
use crate::numeric::{golden_max, log_sum_exp};
use crate::params::{derive_aw, phase_of, AsepParams, AwParams, PhaseInfo};

/// `log(e^a + e^b)`.
fn log_add_exp(a: f64, b: f64) -> f64 {
    log_sum_exp(&[a, b])
}

/// Relative entropy `h(x|p)` of Bernoulli laws, with `0 log 0 = 0`.
pub fn bernoulli_entropy(x: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(p > 0.0 && p < 1.0) {
        return Err(AsepError::DomainError(format!(
            "relative entropy needs x in [0, 1] and p in (0, 1), got x = {x}, p = {p}"
        )));
    }
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    Ok(term(x, p) + term(1.0 - x, 1.0 - p))
}

enum Branch {
    Left,
    Middle,
    Right,
}

fn branch_value(branch: Branch, lambda: f64, aw: &AwParams) -> f64 {
    match branch {
        // log(C + e^lambda) + log((1+C)/C)
        Branch::Left => log_add_exp(aw.c.ln(), lambda) + (1.0 + aw.c).ln() - aw.c.ln(),
        Branch::Middle => 2.0 * log_add_exp(0.0, 0.5 * lambda),
        // log(1 + A e^lambda) + log((1+A)/A)
        Branch::Right => log_add_exp(0.0, aw.a.ln() + lambda) + (1.0 + aw.a).ln() - aw.a.ln(),
    }
}

/// Unnormalized limit `L(lambda)`; `Lambda(lambda) = L(lambda) - L(0)`.
pub fn script_l(lambda: f64, aw: &AwParams) -> Result<f64> {
    aw.check_fan()?;
    // Boundaries in lambda: 2 log C and -2 log A (infinite when C or A is 0).
    let left_edge = 2.0 * aw.c.ln();
    let right_edge = -2.0 * aw.a.ln();
    let at_edge = |edge: f64, outer: Branch| {
        let a = branch_value(outer, edge, aw);
        let b = branch_value(Branch::Middle, edge, aw);
        assert!(
            (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
            "branches disagree at the boundary: {a} vs {b}"
        );
        b
    };
    Ok(if lambda == left_edge {
        at_edge(left_edge, Branch::Left)
    } else if lambda == right_edge {
        at_edge(right_edge, Branch::Right)
    } else if lambda < left_edge {
        branch_value(Branch::Left, lambda, aw)
    } else if lambda > right_edge {
        branch_value(Branch::Right, lambda, aw)
    } else {
        branch_value(Branch::Middle, lambda, aw)
    })
}

/// `L(0)`.
pub fn script_l0(aw: &AwParams) -> Result<f64> {
    script_l(0.0, aw)
}

/// Scaled cumulant generating function `Lambda(lambda) = L(lambda) - L(0)`.
pub fn lambda_closed(lambda: f64, aw: &AwParams) -> Result<f64> {
    Ok(script_l(lambda, aw)? - script_l0(aw)?)
}

/// Derivative of `Lambda`.
pub fn lambda_derivative(lambda: f64, aw: &AwParams) -> Result<f64> {
    aw.check_fan()?;
    let e = lambda.exp();
    Ok(if aw.c > 0.0 && lambda < 2.0 * aw.c.ln() {
        e / (aw.c + e)
    } else if aw.a > 0.0 && lambda > -2.0 * aw.a.ln() {
        aw.a * e / (1.0 + aw.a * e)
    } else {
        let s = (0.5 * lambda).exp();
        s / (1.0 + s)
    })
}

/// Closed-form rate function; `+inf` outside `[0, 1]`.
pub fn rate_i(x: f64, aw: &AwParams) -> Result<f64> {
    let info = phase_of(aw)?;
    if !(0.0..=1.0).contains(&x) {
        return Ok(f64::INFINITY);
    }
    let l0 = script_l0(aw)?;
    let (rho0, rho1) = (info.rho0, info.rho1);
    Ok(if x < 1.0 - rho0 {
        bernoulli_entropy(x, rho0)? + l0 + (rho0 * (1.0 - rho0)).ln()
    } else if x > 1.0 - rho1 {
        bernoulli_entropy(x, rho1)? + l0 + (rho1 * (1.0 - rho1)).ln()
    } else {
        2.0 * bernoulli_entropy(x, 0.5)? + l0 - 4f64.ln()
    })
}

/// Rate function sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFunctionSample {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub phase: PhaseInfo,
    /// Where the rate function vanishes.
    pub zero: f64,
}

pub fn rate_table(aw: &AwParams, grid: &[f64]) -> Result<RateFunctionSample> {
    let phase = phase_of(aw)?;
    let values = grid
        .iter()
        .map(|&x| rate_i(x, aw))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateFunctionSample {
        grid: grid.to_vec(),
        values,
        phase,
        zero: phase.bulk_density,
    })
}

/// `sup_lambda (lambda x - Lambda(lambda))` by golden-section search,
/// for `x` in `(0, 1)`.
pub fn legendre_numeric(x: f64, aw: &AwParams) -> Result<f64> {
    aw.check_fan()?;
    if !(x > 0.0 && x < 1.0) {
        return Err(AsepError::DomainError(format!(
            "numeric Legendre transform needs x in (0, 1), got {x}"
        )));
    }
    let l0 = script_l0(aw)?;
    let objective = |lambda: f64| lambda * x - (script_l(lambda, aw).unwrap_or(f64::NAN) - l0);
    // Bracket the maximizer by the slope of Lambda.
    let (mut lo, mut hi) = (-1.0, 1.0);
    while lambda_derivative(lo, aw)? > x {
        lo *= 2.0;
    }
    while lambda_derivative(hi, aw)? < x {
        hi *= 2.0;
    }
    Ok(golden_max(objective, lo, hi, 1e-10).1)
}

/// `inf` of the rate function over the open interval `(a, b)`.
pub fn inf_rate_on(aw: &AwParams, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(AsepError::DomainError(format!("empty window ({a}, {b})")));
    }
    let zero = phase_of(aw)?.bulk_density;
    // Convex with its minimum at `zero`, so the infimum sits at the clamp.
    rate_i(zero.clamp(a.max(0.0), b.min(1.0)), aw)
}

/// `(1/N) log <exp(lambda sum_j tau_j)>_N` from the exact count law.
pub fn empirical_lambda(asep: &AsepParams, n: usize, lambda: f64) -> Result<f64> {
    derive_aw(asep)?.check_fan()?;
    if n == 0 {
        return Err(AsepError::DomainError(
            "lattice size must be positive".into(),
        ));
    }
    Ok(count_gf_poly(asep, n)?.log_mgf(lambda) / n as f64)
}

/// `(1/N) log P_N(a < (1/N) sum_j tau_j < b)`.
pub fn ldp_window(asep: &AsepParams, n: usize, a: f64, b: f64) -> Result<f64> {
    derive_aw(asep)?.check_fan()?;
    if n == 0 || !(a < b) {
        return Err(AsepError::DomainError(format!(
            "need N > 0 and a < b, got N = {n}, ({a}, {b})"
        )));
    }
    let law = count_gf_poly(asep, n)?;
    let total = law.coeffs.iter().sum::<f64>().ln();
    let terms: Vec<f64> = law
        .coeffs
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let x = *k as f64 / n as f64;
            a < x && x < b
        })
        .map(|(_, c)| c.ln() - total)
        .collect();
    Ok(log_sum_exp(&terms) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn aw(alpha: f64, beta: f64, gamma: f64, delta: f64, q: f64) -> AwParams {
        derive_aw(&AsepParams::new(alpha, beta, gamma, delta, q).unwrap()).unwrap()
    }

    #[test]
    fn entropy() {
        assert_eq!(bernoulli_entropy(0.3, 0.3).unwrap(), 0.0);
        assert_relative_eq!(bernoulli_entropy(0.0, 0.3).unwrap(), -(0.7f64).ln());
        assert!(bernoulli_entropy(0.3, 0.5).unwrap() > 0.0);
        assert!(bernoulli_entropy(1.2, 0.5).is_err());
        assert!(bernoulli_entropy(0.5, 1.0).is_err());
    }

    #[test]
    fn maximal_current_constants() {
        let p = aw(1.0, 1.0, 0.0, 0.0, 0.0);
        assert_relative_eq!(script_l0(&p).unwrap(), 4f64.ln(), epsilon = 1e-15);
        for &x in &[0.0, 0.2, 0.5, 0.9, 1.0] {
            let expect = 2.0 * bernoulli_entropy(x, 0.5).unwrap();
            assert_relative_eq!(rate_i(x, &p).unwrap(), expect, epsilon = 1e-14);
        }
        assert_eq!(rate_i(1.5, &p).unwrap(), f64::INFINITY);
    }

    #[test]
    fn low_density_constants() {
        let p = aw(0.4, 1.0, 0.0, 0.0, 0.0);
        assert_relative_eq!(p.c, 1.5, epsilon = 1e-14);
        let l0 = script_l0(&p).unwrap();
        assert!((l0 - 1.427117).abs() < 1e-6);
        assert_relative_eq!(script_l(-60.0, &p).unwrap(), 2.5f64.ln(), epsilon = 1e-12);
        assert!(rate_i(0.4, &p).unwrap().abs() < 1e-14);
        for k in 0..=100 {
            let x = k as f64 / 100.0;
            if (x - 0.4).abs() > 1e-9 {
                assert!(rate_i(x, &p).unwrap() > 0.0);
            }
        }
        assert_relative_eq!(rate_i(0.0, &p).unwrap(), l0 - 2.5f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(rate_i(1.0, &p).unwrap(), l0, epsilon = 1e-14);
    }

    #[test]
    fn continuity_at_boundaries() {
        let p = aw(0.4, 0.9, 0.0, 0.0, 0.0);
        let left = 2.0 * p.c.ln();
        let eps = 1e-9;
        let v = script_l(left, &p).unwrap();
        assert!((script_l(left - eps, &p).unwrap() - v).abs() < 1e-8);
        assert!((script_l(left + eps, &p).unwrap() - v).abs() < 1e-8);
    }

    #[test]
    fn empirical_at_zero() {
        let asep = AsepParams::tasep(1.0, 1.0).unwrap();
        for n in [5, 20] {
            assert!(empirical_lambda(&asep, n, 0.0).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn empirical_converges() {
        let asep = AsepParams::tasep(1.0, 1.0).unwrap();
        let p = derive_aw(&asep).unwrap();
        let limit = lambda_closed(1.0, &p).unwrap();
        let errs: Vec<f64> = [50, 100, 200]
            .iter()
            .map(|&n| (empirical_lambda(&asep, n, 1.0).unwrap() - limit).abs())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
        assert!(errs[2] <= 0.05);
    }

    #[test]
    fn window_matches_rate() {
        let asep = AsepParams::tasep(1.0, 1.0).unwrap();
        let p = derive_aw(&asep).unwrap();
        let w = ldp_window(&asep, 200, 0.6, 0.7).unwrap();
        let target = -inf_rate_on(&p, 0.6, 0.7).unwrap();
        assert!((w - target).abs() < 0.05, "{w} vs {target}");
    }

    fn fan_params() -> impl Strategy<Value = AwParams> {
        (
            0.05f64..2.0,
            0.05f64..2.0,
            0.0f64..0.5,
            0.0f64..0.5,
            0.0f64..0.8,
        )
            .prop_map(|(al, be, ga, de, q)| AsepParams::new(al, be, ga, de, q))
            .prop_filter_map("fan region", |r| {
                r.ok()
                    .and_then(|a| derive_aw(&a).ok())
                    .filter(|p| p.a * p.c < 0.95)
            })
    }

    proptest! {
        #[test]
        fn legendre_matches_closed_form(p in fan_params(), k in 1usize..20) {
            let x = k as f64 / 20.0;
            let closed = rate_i(x, &p).unwrap();
            let numeric = legendre_numeric(x, &p).unwrap();
            prop_assert!((closed - numeric).abs() < 1e-6, "{} vs {}", closed, numeric);
        }

        #[test]
        fn lambda_convex(p in fan_params()) {
            let vals: Vec<f64> = (-40..=40)
                .map(|k| lambda_closed(k as f64 * 0.25, &p).unwrap())
                .collect();
            for w in vals.windows(3) {
                prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12);
            }
        }

        #[test]
        fn derivative_ranges(p in fan_params(), lambda in -20.0f64..20.0) {
            let d = lambda_derivative(lambda, &p).unwrap();
            let info = phase_of(&p).unwrap();
            let e = lambda.exp();
            if e < p.c * p.c {
                prop_assert!(d > 0.0 && d < 1.0 - info.rho0 + 1e-12);
            } else if p.a > 0.0 && e > 1.0 / (p.a * p.a) {
                prop_assert!(d > 1.0 - info.rho1 - 1e-12 && d < 1.0);
            } else {
                prop_assert!(d >= 1.0 - info.rho0 - 1e-12 && d <= 1.0 - info.rho1 + 1e-12);
            }
        }

        #[test]
        fn rate_nonnegative_with_zero(p in fan_params(), k in 0usize..=50) {
            let x = k as f64 / 50.0;
            let info = phase_of(&p).unwrap();
            prop_assert!(rate_i(x, &p).unwrap() >= -1e-14);
            prop_assert!(rate_i(info.bulk_density, &p).unwrap().abs() < 1e-12);
        }
    }
}
