//! Limits of the leftmost `K` sites as the lattice grows, with the sites
//! beyond `K` tilted by `u^{tau}`.
//!
//! The limit law `mu_{K,u}` is again of matrix-product form, built from an
//! Askey-Wilson process whose parameters depend on `u`. For `u <= C^2` that
//! process is deterministic and the law is product Bernoulli.

use serde::Serialize;

use crate::ansatz::{joint_gf_exact, joint_gf_quadruple};
use crate::awdist::{MixedMeasure, SupportEnvelope};
use crate::error::{AsepError, Result};
use crate::params::{derive_aw, AsepParams, AwParams};

/// Parameters of the process representing `mu_{K,u}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TildeParams {
    pub u: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// `u <= C^2`: the path is `t/C + C` and the law is product Bernoulli.
    pub deterministic: bool,
}

impl TildeParams {
    pub fn aw(&self, q: f64) -> AwParams {
        AwParams::new(self.a, self.b, self.c, self.d, q)
    }
}

fn check_weight(u: f64) -> Result<()> {
    if !(u >= 1.0 && u.is_finite()) {
        return Err(AsepError::ParameterOutOfRange(format!(
            "weight u = {u} must be finite and at least 1"
        )));
    }
    Ok(())
}

pub fn tilde_params(aw: &AwParams, u: f64) -> Result<TildeParams> {
    aw.check_fan()?;
    check_weight(u)?;
    let (a, b) = if u < aw.c * aw.c {
        (aw.c / u, 1.0 / aw.c)
    } else if aw.a > 0.0 && u > 1.0 / (aw.a * aw.a) {
        (aw.a, 1.0 / (aw.a * u))
    } else {
        (u.powf(-0.5), u.powf(-0.5))
    };
    Ok(TildeParams {
        u,
        a,
        b,
        c: aw.c,
        d: aw.d,
        deterministic: u <= aw.c * aw.c,
    })
}

/// `zeta = ||1 + u + sqrt(1-q) Z_u||_inf / u`.
pub fn zeta(aw: &AwParams, u: f64) -> Result<f64> {
    aw.check_fan()?;
    check_weight(u)?;
    Ok((1.0 + u + SupportEnvelope::new(aw).upper(u)) / u)
}

/// Current `J = (1-q) / ||2 + sqrt(1-q) Z_1||_inf`.
pub fn current(aw: &AwParams) -> Result<f64> {
    aw.check_fan()?;
    Ok((1.0 - aw.q) / (2.0 + SupportEnvelope::new(aw).upper(1.0)))
}

fn check_times(ts: &[f64], u: f64, ordered: bool) -> Result<()> {
    let in_range = ts.iter().all(|&t| t > 0.0 && t <= u);
    let sorted = !ordered || ts.windows(2).all(|w| w[0] <= w[1]);
    if in_range && sorted {
        Ok(())
    } else {
        Err(AsepError::NonMonotoneTimes { bound: u })
    }
}

/// `int prod_j t_j^{tau_j} d mu_{K,u}` for `0 < t_1 <= ... <= t_K <= u`.
pub fn mu_gf(aw: &AwParams, u: f64, ts: &[f64]) -> Result<f64> {
    check_weight(u)?;
    check_times(ts, u, true)?;
    mu_gf_unordered(aw, u, ts)
}

/// Same as [`mu_gf`] with the times in any order (still within `(0, u]`);
/// both sides are multi-affine in the times, so the identity extends.
pub fn mu_gf_unordered(aw: &AwParams, u: f64, ts: &[f64]) -> Result<f64> {
    let tilde = tilde_params(aw, u)?;
    check_times(ts, u, false)?;
    if tilde.deterministic {
        // 1 + t + t/C + C, normalized at t = 1.
        let c = aw.c;
        return Ok(ts.iter().map(|t| (c + t) / (c + 1.0)).product());
    }
    joint_gf_quadruple(&tilde.aw(aw.q), ts, &vec![1.0; ts.len()])
}

/// Occupation probability of each site under `mu_{K,u}` when it is product
/// Bernoulli, `None` otherwise.
pub fn bernoulli_density(aw: &AwParams, u: f64) -> Result<Option<f64>> {
    let tilde = tilde_params(aw, u)?;
    Ok(tilde.deterministic.then(|| 1.0 / (1.0 + aw.c)))
}

/// Limit of [`mu_gf`] as `u -> inf`, from the quadruple `(A, 0, C, D)`.
pub fn mu_gf_limit(aw: &AwParams, ts: &[f64]) -> Result<f64> {
    aw.check_fan()?;
    if ts.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(AsepError::NonMonotoneTimes {
            bound: f64::INFINITY,
        });
    }
    let limit = AwParams::new(aw.a, 0.0, aw.c, aw.d, aw.q);
    joint_gf_quadruple(&limit, ts, &vec![1.0; ts.len()])
}

/// Finite-lattice counterpart of [`mu_gf`]:
/// `<prod_{j<=K} t_j^{tau_j} u^{rest}>_N / <u^{rest}>_N`.
pub fn tilted_marginal_gf(asep: &AsepParams, n: usize, u: f64, ts: &[f64]) -> Result<f64> {
    if ts.len() > n {
        return Err(AsepError::LengthMismatch {
            expected: n,
            got: ts.len(),
        });
    }
    let mut num = vec![u; n];
    num[..ts.len()].copy_from_slice(ts);
    let mut den = vec![u; n];
    den[..ts.len()].iter_mut().for_each(|t| *t = 1.0);
    Ok(joint_gf_exact(asep, &num)? / joint_gf_exact(asep, &den)?)
}

/// Exit rate of the `K`-site lattice whose stationary law is the `u -> inf`
/// limit; the other rates are unchanged except that the right entry rate
/// becomes zero.
pub fn effective_beta(asep: &AsepParams) -> Result<AsepParams> {
    derive_aw(asep)?.check_fan()?;
    let AsepParams {
        alpha,
        beta,
        gamma,
        delta,
        q,
    } = *asep;
    let root = (4.0 * beta * delta + (beta - delta + q - 1.0).powi(2)).sqrt();
    let beta_eff = 2.0 * beta * (1.0 - q) / (1.0 - q + beta + delta + root);
    AsepParams::new(alpha, beta_eff, gamma, 0.0, q)
}

/// `E[p(Z) Z^n] / E[Z^n]` for `Z >= 0` bounded, `p` given by its
/// coefficients in increasing degree. Tends to `p(||Z||_inf)`.
pub fn ratio_limit_check(z: &MixedMeasure, poly: &[f64], n: u32) -> Result<f64> {
    let (lo, hi) = z.support_hull();
    if lo < -1e-12 || !(hi > 0.0 && hi.is_finite()) {
        return Err(AsepError::DomainError(format!(
            "ratio limit needs a bounded nonnegative variable, support [{lo}, {hi}]"
        )));
    }
    let eval = |x: f64| poly.iter().rev().fold(0.0, |acc, c| acc * x + c);
    // Powers relative to the maximum stay in range for large n.
    let power = |x: f64| (x.max(0.0) / hi).powi(n as i32);
    let num = z.expect_adaptive(|x| eval(x) * power(x), 1e-13)?;
    let den = z.expect_adaptive(power, 1e-13)?;
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::joint_gf_quadruple;
    use crate::awdist::marginal_z;
    use approx::assert_relative_eq;

    fn aw_of(alpha: f64, beta: f64, gamma: f64, delta: f64, q: f64) -> AwParams {
        derive_aw(&AsepParams::new(alpha, beta, gamma, delta, q).unwrap()).unwrap()
    }

    #[test]
    fn tilde_table() {
        let mc = aw_of(1.0, 1.0, 0.0, 0.0, 0.0);
        let t = tilde_params(&mc, 1.0).unwrap();
        assert_eq!((t.a, t.b, t.deterministic), (1.0, 1.0, false));
        let ld = aw_of(0.4, 1.0, 0.0, 0.0, 0.0);
        let t = tilde_params(&ld, 1.0).unwrap();
        assert_relative_eq!(t.a, 1.5, epsilon = 1e-14);
        assert_relative_eq!(t.b, 2.0 / 3.0, epsilon = 1e-14);
        assert!(t.deterministic);
        let hd = aw_of(1.0, 0.2, 0.1, 0.0, 0.2);
        let t = tilde_params(&hd, 1e8).unwrap();
        assert_eq!(t.a, hd.a);
        assert!(t.b < 1e-7);
        assert!(tilde_params(&mc, 0.5).is_err());
    }

    #[test]
    fn zeta_and_current() {
        let mc = aw_of(1.0, 1.0, 0.0, 0.0, 0.0);
        assert_relative_eq!(current(&mc).unwrap(), 0.25);
        let ld = aw_of(0.4, 1.0, 0.0, 0.0, 0.0);
        assert_relative_eq!(zeta(&ld, 1.0).unwrap(), 2.5 * 2.5 / 1.5, epsilon = 1e-14);
        for &u in &[1.0, 3.0, 50.0] {
            let hd = aw_of(0.9, 0.3, 0.0, 0.1, 0.1);
            let (a, c) = (hd.a, hd.c);
            let expect = if u < c * c {
                (c + 1.0) * (c + u) / (c * u)
            } else if u > 1.0 / (a * a) {
                (a + 1.0) * (a * u + 1.0) / (a * u)
            } else {
                (1.0 + u.powf(-0.5)).powi(2)
            };
            assert_relative_eq!(zeta(&hd, u).unwrap(), expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn deterministic_regime_matches_matrix_route() {
        let ld = aw_of(0.4, 0.7, 0.05, 0.1, 0.2);
        assert!(ld.c > 1.0);
        let u = 0.9 * ld.c * ld.c;
        let tilde = tilde_params(&ld, u.max(1.0)).unwrap();
        assert!(tilde.deterministic);
        let ts = [0.3, 0.5, 0.9];
        let closed = mu_gf(&ld, tilde.u, &ts).unwrap();
        let matrix = joint_gf_quadruple(&tilde.aw(ld.q), &ts, &[1.0; 3]).unwrap();
        assert_relative_eq!(closed, matrix, max_relative = 1e-12);
    }

    #[test]
    fn consistency_at_one() {
        let mc = aw_of(0.8, 0.9, 0.1, 0.2, 0.3);
        let ts = [0.2, 0.5, 0.7];
        let k3 = mu_gf(&mc, 1.0, &ts).unwrap();
        let k4 = mu_gf(&mc, 1.0, &[0.2, 0.5, 0.7, 1.0]).unwrap();
        assert!((k3 - k4).abs() < 1e-10);
        // The tilde marginal at time 1 is a point mass.
        let tilde = tilde_params(&mc, 1.0).unwrap();
        let law = marginal_z(&tilde.aw(mc.q), 1.0).unwrap();
        assert!(law.variance() < 1e-8);
    }

    #[test]
    fn inconsistent_at_two() {
        let mc = aw_of(1.0, 1.0, 0.0, 0.0, 0.0);
        let k1 = mu_gf(&mc, 2.0, &[0.5]).unwrap();
        let k2 = mu_gf(&mc, 2.0, &[0.5, 1.0]).unwrap();
        assert!((k1 - k2).abs() > 1e-4);
    }

    #[test]
    fn finite_lattice_limit() {
        let asep = AsepParams::new(0.8, 0.9, 0.1, 0.2, 0.3).unwrap();
        let mc = derive_aw(&asep).unwrap();
        let ts = [0.4, 0.8];
        let limit = mu_gf(&mc, 1.0, &ts).unwrap();
        let finite = tilted_marginal_gf(&asep, 400, 1.0, &ts).unwrap();
        assert!((limit - finite).abs() < 1e-3);
        // The tilt does not move the left sites in the deterministic regime.
        let ld_asep = AsepParams::tasep(0.4, 1.0).unwrap();
        let ld = derive_aw(&ld_asep).unwrap();
        let limit = mu_gf(&ld, 2.0, &[0.5]).unwrap();
        let finite = tilted_marginal_gf(&ld_asep, 400, 2.0, &[0.5]).unwrap();
        assert!((limit - finite).abs() < 1e-3);
        assert_relative_eq!(limit, 0.8, epsilon = 1e-14);
        // Heavy tilts on long lattices must not overflow.
        let heavy =
            tilted_marginal_gf(&AsepParams::tasep(0.3, 1.0).unwrap(), 400, 16.0, &[0.5]).unwrap();
        assert!(heavy.is_finite() && heavy > 0.0 && heavy < 1.0);
    }

    #[test]
    fn effective_beta_values() {
        let a = AsepParams::new(0.7, 0.3, 0.1, 0.0, 0.2).unwrap();
        assert_relative_eq!(effective_beta(&a).unwrap().beta, 0.3, epsilon = 1e-14);
        let a = AsepParams::new(0.7, 0.9, 0.1, 0.0, 0.2).unwrap();
        assert_relative_eq!(effective_beta(&a).unwrap().beta, 0.8, epsilon = 1e-14);
        let a = AsepParams::new(0.7, 0.9, 0.1, 0.3, 0.2).unwrap();
        let aw = derive_aw(&a).unwrap();
        let eff = derive_aw(&effective_beta(&a).unwrap()).unwrap();
        assert_eq!(eff.b, 0.0);
        assert_relative_eq!(eff.a, aw.a, max_relative = 1e-12);
    }

    #[test]
    fn ratio_limits() {
        let mc = aw_of(1.0, 1.0, 0.0, 0.0, 0.0);
        let z = marginal_z(&mc, 1.0).unwrap().affine(1.0, 2.0);
        assert_relative_eq!(
            ratio_limit_check(&z, &[1.0], 7).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let r = ratio_limit_check(&z, &[0.0, 1.0], 400).unwrap();
        assert!((r - 4.0).abs() < 0.05);
        let ld = aw_of(0.4, 1.0, 0.0, 0.0, 0.0);
        let z = marginal_z(&ld, 1.0).unwrap().affine(1.0, 2.0);
        let top = 2.0 + SupportEnvelope::new(&ld).upper(1.0);
        // The continuous part decays like (4/top)^n, so geometric but slow.
        let gaps: Vec<f64> = [60u32, 200, 400]
            .iter()
            .map(|&n| (ratio_limit_check(&z, &[0.0, 1.0], n).unwrap() - top).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
        assert!(gaps[2] < 1e-6);
    }
}
