//! Physical rates of the open-boundary exclusion process and the
//! Askey-Wilson parameters derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{AsepError, Result};

/// Rates of the open-boundary ASEP.
///
/// Particles enter at site 1 with rate `alpha` and leave it with rate
/// `gamma`; they enter at site `N` with rate `delta` and leave it with rate
/// `beta`. Bulk hops go right with rate 1 and left with rate `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsepParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub q: f64,
}

impl AsepParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, q: f64) -> Result<Self> {
        let p = AsepParams {
            alpha,
            beta,
            gamma,
            delta,
            q,
        };
        p.validate()?;
        Ok(p)
    }

    /// Totally asymmetric process with no reverse boundary rates.
    pub fn tasep(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha, self.beta, self.gamma, self.delta, self.q]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(AsepError::InvalidAsepParams("rates must be finite".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(AsepError::InvalidAsepParams(format!(
                "alpha and beta must be positive (alpha = {}, beta = {})",
                self.alpha, self.beta
            )));
        }
        if self.gamma < 0.0 || self.delta < 0.0 {
            return Err(AsepError::InvalidAsepParams(format!(
                "gamma and delta must be nonnegative (gamma = {}, delta = {})",
                self.gamma, self.delta
            )));
        }
        if !(0.0..1.0).contains(&self.q) {
            return Err(AsepError::InvalidAsepParams(format!(
                "q must lie in [0, 1) (q = {})",
                self.q
            )));
        }
        Ok(())
    }

    /// Mirror image under the particle-hole exchange combined with site
    /// reversal: `(alpha, beta, gamma, delta) -> (beta, alpha, delta, gamma)`.
    pub fn particle_hole(&self) -> Self {
        AsepParams {
            alpha: self.beta,
            beta: self.alpha,
            gamma: self.delta,
            delta: self.gamma,
            q: self.q,
        }
    }
}

/// Which root of the quadratic to take in [`kappa`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Root {
    Plus,
    Minus,
}

/// `kappa_±(u, v) = (1-q-u+v ± sqrt((1-q-u+v)^2 + 4uv)) / (2u)`.
///
/// The root that would cancel is evaluated through the product
/// `kappa_+ kappa_- = -v/u`.
pub fn kappa(u: f64, v: f64, q: f64, root: Root) -> f64 {
    debug_assert!(u > 0.0 && v >= 0.0 && (0.0..1.0).contains(&q));
    let b = 1.0 - q - u + v;
    let s = (b * b + 4.0 * u * v).sqrt();
    match (root, b >= 0.0) {
        (Root::Plus, true) => (b + s) / (2.0 * u),
        (Root::Minus, false) => (b - s) / (2.0 * u),
        (Root::Plus, false) => {
            if v == 0.0 {
                0.0
            } else {
                2.0 * v / (s - b)
            }
        }
        (Root::Minus, true) => {
            if v == 0.0 {
                0.0
            } else {
                -2.0 * v / (b + s)
            }
        }
    }
}

/// Askey-Wilson parameters `(A, B, C, D)` together with `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub q: f64,
}

impl AwParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64, q: f64) -> Self {
        AwParams { a, b, c, d, q }
    }

    /// Errors unless `AC < 1`.
    pub fn check_fan(&self) -> Result<()> {
        if self.a * self.c < 1.0 {
            Ok(())
        } else {
            Err(AsepError::FanRegionViolation {
                a: self.a,
                c: self.c,
            })
        }
    }

    pub fn abcd(&self) -> f64 {
        self.a * self.b * self.c * self.d
    }
}

/// Maps ASEP rates to `(A, B, C, D)`; fails outside the fan region `AC < 1`.
pub fn derive_aw(asep: &AsepParams) -> Result<AwParams> {
    asep.validate()?;
    let q = asep.q;
    let aw = AwParams {
        a: kappa(asep.beta, asep.delta, q, Root::Plus),
        b: kappa(asep.beta, asep.delta, q, Root::Minus),
        c: kappa(asep.alpha, asep.gamma, q, Root::Plus),
        d: kappa(asep.alpha, asep.gamma, q, Root::Minus),
        q,
    };
    aw.check_fan()?;
    Ok(aw)
}

/// Recovers the ASEP rates encoded by a real quadruple.
pub fn invert_aw(aw: &AwParams) -> Result<AsepParams> {
    let AwParams { a, b, c, d, q } = *aw;
    if ![a, b, c, d, q].iter().all(|v| v.is_finite()) {
        return Err(AsepError::InvalidAwParams("non-finite parameter".into()));
    }
    if !(0.0..1.0).contains(&q) {
        return Err(AsepError::InvalidAwParams(format!("q = {q} not in [0, 1)")));
    }
    let ab1 = (1.0 + a) * (1.0 + b);
    let cd1 = (1.0 + c) * (1.0 + d);
    if ab1 <= 0.0 || cd1 <= 0.0 {
        return Err(AsepError::InvalidAwParams(format!(
            "(1+A)(1+B) = {ab1} and (1+C)(1+D) = {cd1} must be positive"
        )));
    }
    if a * b > 0.0 || c * d > 0.0 {
        return Err(AsepError::InvalidAwParams(format!(
            "AB = {} and CD = {} must be nonpositive",
            a * b,
            c * d
        )));
    }
    let p = 1.0 - q;
    Ok(AsepParams {
        alpha: p / cd1,
        beta: p / ab1,
        gamma: -p * c * d / cd1,
        delta: -p * a * b / ab1,
        q,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    LowDensity,
    HighDensity,
    MaximalCurrent,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::LowDensity => "LowDensity",
            Phase::HighDensity => "HighDensity",
            Phase::MaximalCurrent => "MaximalCurrent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseInfo {
    /// Effective left reservoir density `1/(1+C)`.
    pub rho0: f64,
    /// Effective right reservoir density `A/(1+A)`.
    pub rho1: f64,
    pub phase: Phase,
    /// Unique zero of the particle-density rate function.
    pub bulk_density: f64,
}

/// Boundary densities and phase. `A = 1` or `C = 1` counts as maximal current.
pub fn phase_of(aw: &AwParams) -> Result<PhaseInfo> {
    aw.check_fan()?;
    let rho0 = 1.0 / (1.0 + aw.c);
    let rho1 = aw.a / (1.0 + aw.a);
    let (phase, bulk_density) = if aw.c > 1.0 {
        (Phase::LowDensity, rho0)
    } else if aw.a > 1.0 {
        (Phase::HighDensity, rho1)
    } else {
        (Phase::MaximalCurrent, 0.5)
    };
    Ok(PhaseInfo {
        rho0,
        rho1,
        phase,
        bulk_density,
    })
}

pub fn phase_info(asep: &AsepParams) -> Result<PhaseInfo> {
    phase_of(&derive_aw(asep)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(1.0, 0.0, 0.0, Root::Plus), 0.0);
        assert_relative_eq!(kappa(0.4, 0.0, 0.0, Root::Plus), 1.5, epsilon = 1e-15);
        // With v = 0 the roots are 0 and (1-q-u)/u; the negative one is the
        // minus root only once u exceeds 1-q.
        for &(u, q) in &[(0.3, 0.0), (0.5, 0.5), (0.05, 0.9), (0.6, 0.3)] {
            assert_eq!(kappa(u, 0.0, q, Root::Minus), 0.0);
        }
        for &(u, q) in &[(1.5, 0.0), (1.0, 0.5), (2.0, 0.9)] {
            assert_eq!(kappa(u, 0.0, q, Root::Plus), 0.0);
            assert_relative_eq!(
                kappa(u, 0.0, q, Root::Minus),
                (1.0 - q - u) / u,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn derive_tasep_cases() {
        let aw = derive_aw(&AsepParams::tasep(1.0, 1.0).unwrap()).unwrap();
        assert_eq!((aw.a, aw.b, aw.c, aw.d), (0.0, 0.0, 0.0, 0.0));

        let (al, be) = (0.7, 0.6);
        let aw = derive_aw(&AsepParams::tasep(al, be).unwrap()).unwrap();
        assert_relative_eq!(aw.a, (1.0 - be) / be, epsilon = 1e-15);
        assert_relative_eq!(aw.c, (1.0 - al) / al, epsilon = 1e-15);
        assert_eq!(aw.b, 0.0);
        assert_eq!(aw.d, 0.0);
    }

    #[test]
    fn fan_violation_reports_a_and_c() {
        let err = derive_aw(&AsepParams::tasep(0.4, 0.4).unwrap()).unwrap_err();
        match err {
            AsepError::FanRegionViolation { a, c } => {
                assert_relative_eq!(a, 1.5, epsilon = 1e-14);
                assert_relative_eq!(c, 1.5, epsilon = 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
        // AC = 1 exactly is rejected as well.
        let aw = AwParams::new(2.0, 0.0, 0.5, 0.0, 0.0);
        assert!(aw.check_fan().is_err());
    }

    #[test]
    fn invert_examples() {
        let p = invert_aw(&AwParams::new(0.0, 0.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!((p.alpha, p.beta, p.gamma, p.delta), (1.0, 1.0, 0.0, 0.0));
        let p = invert_aw(&AwParams::new(1.5, 0.0, 0.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(p.alpha, 1.0);
        assert_relative_eq!(p.beta, 0.4, epsilon = 1e-15);
        assert_eq!(p.gamma, 0.0);
        assert_eq!(p.delta, 0.0);
        assert!(invert_aw(&AwParams::new(0.5, 0.5, 0.0, 0.0, 0.0)).is_err());
        assert!(invert_aw(&AwParams::new(-2.0, 0.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn phase_examples() {
        let ld = phase_info(&AsepParams::tasep(0.4, 1.0).unwrap()).unwrap();
        assert_relative_eq!(ld.rho0, 0.4, epsilon = 1e-15);
        assert_eq!(ld.rho1, 0.0);
        assert_eq!(ld.phase, Phase::LowDensity);
        assert_relative_eq!(ld.bulk_density, 0.4, epsilon = 1e-15);

        let mc = phase_info(&AsepParams::tasep(1.0, 1.0).unwrap()).unwrap();
        assert_eq!((mc.rho0, mc.rho1), (1.0, 0.0));
        assert_eq!(mc.phase, Phase::MaximalCurrent);
        assert_eq!(mc.bulk_density, 0.5);

        let hd = phase_info(&AsepParams::tasep(1.0, 0.4).unwrap()).unwrap();
        assert_relative_eq!(hd.rho1, 0.6, epsilon = 1e-15);
        assert_eq!(hd.phase, Phase::HighDensity);
        assert_relative_eq!(hd.bulk_density, 0.6, epsilon = 1e-15);

        // A = 1 and C = 1 sit on the maximal-current side.
        let edge = phase_of(&AwParams::new(1.0, 0.0, 0.5, 0.0, 0.0)).unwrap();
        assert_eq!(edge.phase, Phase::MaximalCurrent);
        let edge = phase_of(&AwParams::new(0.5, 0.0, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(edge.phase, Phase::MaximalCurrent);
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(AsepParams::new(0.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(AsepParams::new(1.0, 1.0, -0.1, 0.0, 0.0).is_err());
        assert!(AsepParams::new(1.0, 1.0, 0.0, 0.0, 1.0).is_err());
    }

    fn rates() -> impl Strategy<Value = AsepParams> {
        (
            0.05f64..3.0,
            0.05f64..3.0,
            0.0f64..2.0,
            0.0f64..2.0,
            0.0f64..0.95,
        )
            .prop_map(|(alpha, beta, gamma, delta, q)| AsepParams {
                alpha,
                beta,
                gamma,
                delta,
                q,
            })
    }

    proptest! {
        #[test]
        fn kappa_ranges(u in 0.01f64..5.0, v in 0.0f64..5.0, q in 0.0f64..0.99) {
            let kp = kappa(u, v, q, Root::Plus);
            let km = kappa(u, v, q, Root::Minus);
            prop_assert!(kp >= 0.0);
            prop_assert!(km <= 0.0 && km > -1.0);
            // Both roots solve u k^2 - (1-q-u+v) k - v = 0.
            let b = 1.0 - q - u + v;
            for k in [kp, km] {
                let scale = (u * k * k).abs() + (b * k).abs() + v + 1e-300;
                prop_assert!((u * k * k - b * k - v).abs() <= 1e-13 * scale);
            }
        }

        #[test]
        fn abcd_product_and_round_trip(p in rates()) {
            let Ok(aw) = derive_aw(&p) else { return Ok(()); };
            let target = p.gamma * p.delta / (p.alpha * p.beta);
            prop_assert!((aw.abcd() - target).abs() <= 1e-13 * target.max(1e-300) + 1e-300);
            let back = invert_aw(&aw).unwrap();
            for (x, y) in [(back.alpha, p.alpha), (back.beta, p.beta), (back.gamma, p.gamma), (back.delta, p.delta)] {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-3));
            }
            let ph = phase_of(&aw).unwrap();
            prop_assert!(ph.rho0 > ph.rho1);
        }
    }
}
