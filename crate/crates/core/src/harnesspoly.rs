//! The bi-Poisson process behind the model when `gamma = delta = 0`:
//! its orthogonal and martingale polynomials, the operators `H_t` and
//! `A_t`, and the integral formula for the density profile.
//!
//! The transition laws of the process `X_t` are not built from scratch.
//! For fixed `t` the map between `X_t` and `1 + t + sqrt(1-q) Z_t` is affine,
//! so every `X` kernel is an Askey-Wilson kernel of `Z` pushed through it.

use std::f64::consts::PI;

use serde::Serialize;

use crate::awdist::{marginal_z, transition_law, Continuous, MixedMeasure};
use crate::error::{AsepError, Result};
use crate::params::{derive_aw, AsepParams, AwParams};

/// `[n]_q = 1 + q + ... + q^{n-1}`, with `[0]_q = 0`.
pub fn q_number(n: usize, q: f64) -> f64 {
    (0..n).map(|k| q.powi(k as i32)).sum()
}

/// Polynomial with coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QPolynomial {
    pub coeffs: Vec<f64>,
}

impl QPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = QPolynomial { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: f64) -> Self {
        QPolynomial::new(vec![c])
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// `(p(y) - p(x)) / (y - x)` as a polynomial in `y`.
    pub fn divided_difference(&self, x: f64) -> QPolynomial {
        // y^k - x^k = (y - x) sum_{i<k} y^i x^{k-1-i}
        let n = self.coeffs.len();
        let mut out = vec![0.0; n.saturating_sub(1).max(1)];
        for (k, &c) in self.coeffs.iter().enumerate().skip(1) {
            let mut xp = 1.0;
            for i in (0..k).rev() {
                out[i] += c * xp;
                xp *= x;
            }
        }
        QPolynomial::new(out)
    }

    /// `d/dx (p(y) - p(x)) / (y - x)` as a polynomial in `y`.
    pub fn divided_difference_dx(&self, x: f64) -> QPolynomial {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n.saturating_sub(1).max(1)];
        for (k, &c) in self.coeffs.iter().enumerate().skip(2) {
            // d/dx x^{k-1-i} = (k-1-i) x^{k-2-i}
            for (i, slot) in out.iter_mut().enumerate().take(k - 1) {
                let e = k - 1 - i;
                *slot += c * e as f64 * x.powi(e as i32 - 1);
            }
        }
        QPolynomial::new(out)
    }

    fn shift_mul(&self, a: f64) -> QPolynomial {
        // (y - a) p(y)
        let mut out = vec![0.0; self.coeffs.len() + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            out[k + 1] += c;
            out[k] -= a * c;
        }
        QPolynomial::new(out)
    }

    fn axpy(&self, scale: f64, other: &QPolynomial) -> QPolynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &QPolynomial, k: usize| p.coeffs.get(k).copied().unwrap_or(0.0);
        QPolynomial::new(
            (0..n)
                .map(|k| get(self, k) + scale * get(other, k))
                .collect(),
        )
    }

    /// `p(a y + b)`.
    pub fn compose_affine(&self, a: f64, b: f64) -> QPolynomial {
        let lin = QPolynomial::new(vec![b, a]);
        let mut out = QPolynomial::constant(0.0);
        for &c in self.coeffs.iter().rev() {
            out = mul(&out, &lin).axpy(1.0, &QPolynomial::constant(c));
        }
        out
    }
}

fn mul(p: &QPolynomial, r: &QPolynomial) -> QPolynomial {
    let mut out = vec![0.0; p.coeffs.len() + r.coeffs.len() - 1];
    for (i, a) in p.coeffs.iter().enumerate() {
        for (j, b) in r.coeffs.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    QPolynomial::new(out)
}

/// Parameters of the bi-Poisson process, with the rates they come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiPoissonParams {
    pub eta: f64,
    pub theta: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Quadratic-harness constants of a general quadruple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QhConstants {
    pub eta: f64,
    pub theta: f64,
    pub tau: f64,
    pub sigma: f64,
    pub q0: f64,
}

pub fn qh_constants(aw: &AwParams) -> Result<QhConstants> {
    aw.check_fan()?;
    let AwParams { a, b, c, d, q } = *aw;
    let abcd = a * b * c * d;
    let root =
        ((1.0 - a * c) * (1.0 - a * d) * (1.0 - b * c) * (1.0 - b * d) * (1.0 - q * abcd)).sqrt();
    let sq = (1.0 - q).sqrt();
    Ok(QhConstants {
        eta: -((a + b) * (1.0 + abcd) - 2.0 * a * b * (c + d)) * sq / root,
        theta: -((c + d) * (1.0 + abcd) - 2.0 * c * d * (a + b)) * sq / root,
        tau: c * d * (1.0 - q) / (1.0 - q * abcd),
        sigma: a * b * (1.0 - q) / (1.0 - q * abcd),
        q0: (q - abcd) / (1.0 - q * abcd),
    })
}

pub fn eta_theta(alpha: f64, beta: f64, q: f64) -> Result<BiPoissonParams> {
    AsepParams::tasep(alpha, beta)?;
    if !(0.0..1.0).contains(&q) {
        return Err(AsepError::ParameterOutOfRange(format!(
            "q = {q} must lie in [0, 1)"
        )));
    }
    let s = alpha + beta + q - 1.0;
    if s <= 0.0 {
        return Err(AsepError::ParameterOutOfRange(format!(
            "alpha + beta = {} must exceed 1 - q = {}",
            alpha + beta,
            1.0 - q
        )));
    }
    Ok(BiPoissonParams {
        eta: (beta + q - 1.0) / s.sqrt() * (alpha / beta).sqrt(),
        theta: (alpha + q - 1.0) / s.sqrt() * (beta / alpha).sqrt(),
        q,
        alpha,
        beta,
    })
}

impl BiPoissonParams {
    fn asep(&self) -> AsepParams {
        AsepParams {
            alpha: self.alpha,
            beta: self.beta,
            gamma: 0.0,
            delta: 0.0,
            q: self.q,
        }
    }

    fn aw(&self) -> Result<AwParams> {
        derive_aw(&self.asep())
    }

    /// Slope of `L_t`.
    fn slope(&self) -> f64 {
        ((self.alpha + self.beta + self.q - 1.0) / (self.alpha * self.beta)).sqrt()
    }

    /// `L_t(x) = slope x + t/beta + 1/alpha`, so that
    /// `1 + t + sqrt(1-q) Z_t = (1-q) L_t(X_t)`.
    pub fn linear_form(&self, t: f64, x: f64) -> f64 {
        self.slope() * x + t / self.beta + 1.0 / self.alpha
    }

    /// `sqrt(1-q) Z_t` for a given `X_t = x`.
    fn x_to_z(&self, t: f64, x: f64) -> f64 {
        (1.0 - self.q) * self.linear_form(t, x) - 1.0 - t
    }

    /// Pushes a law of `sqrt(1-q) Z_t` to the law of `X_t`.
    fn z_to_x_law(&self, t: f64, z: &MixedMeasure) -> MixedMeasure {
        let scale = 1.0 / ((1.0 - self.q) * self.slope());
        let shift = ((1.0 + t) / (1.0 - self.q) - t / self.beta - 1.0 / self.alpha) / self.slope();
        z.affine(scale, shift)
    }

    /// Law `pi_t` of `X_t`.
    pub fn marginal(&self, t: f64) -> Result<MixedMeasure> {
        Ok(self.z_to_x_law(t, &marginal_z(&self.aw()?, t)?))
    }

    /// `P_{s,t}(x, .)` for `0 <= s < t`. The starting point need not lie in
    /// the support of `X_s`; the kernel is the Askey-Wilson law it defines.
    pub fn transition(&self, s: f64, t: f64, x: f64) -> Result<MixedMeasure> {
        if !(s >= 0.0 && s < t && t.is_finite()) {
            return Err(AsepError::DomainError(format!(
                "transition needs 0 <= s < t, got s = {s}, t = {t}"
            )));
        }
        let z = transition_law(&self.aw()?, s, t, self.x_to_z(s, x))?;
        Ok(self.z_to_x_law(t, &z))
    }

    /// `P_{q^2 t, t}(q(x - t eta) + theta, .)`, the measure behind `H_t`.
    pub fn h_measure(&self, x: f64, t: f64) -> Result<MixedMeasure> {
        let q = self.q;
        self.transition(q * q * t, t, q * (x - t * self.eta) + self.theta)
    }
}

/// `Q_n(y; x, t, s)` as a polynomial in `y`.
pub fn q_poly(n: usize, x: f64, t: f64, s: f64, params: &BiPoissonParams) -> QPolynomial {
    let BiPoissonParams { eta, theta, q, .. } = *params;
    let a_coef = |k: usize| {
        if k == 0 {
            x
        } else {
            let qk1 = q.powi(k as i32 - 1);
            q.powi(k as i32) * x
                + q_number(k, q) * (t * eta + theta - q_number(2, q) * qk1 * s * eta)
        }
    };
    let b_coef = |k: usize| {
        if k == 0 {
            0.0
        } else {
            let qk1 = q.powi(k as i32 - 1);
            q_number(k, q)
                * (t - s * qk1)
                * (1.0 + eta * x * qk1 + q_number(k - 1, q) * eta * (theta - s * eta * qk1))
        }
    };
    let mut prev = QPolynomial::constant(0.0);
    let mut cur = QPolynomial::constant(1.0);
    for k in 0..n {
        let next = cur.shift_mul(a_coef(k)).axpy(-b_coef(k), &prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// Martingale polynomial `M_n(x; t) = Q_n(x; 0, t, 0)`.
pub fn m_poly(n: usize, t: f64, params: &BiPoissonParams) -> QPolynomial {
    q_poly(n, 0.0, t, 0.0, params)
}

/// `H_t(M_n)(x) = eta [n] M_n(x;t) + (1 + eta theta [n-1]) [n] M_{n-1}(x;t)`.
pub fn h_closed(n: usize, x: f64, t: f64, params: &BiPoissonParams) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let BiPoissonParams { eta, theta, q, .. } = *params;
    let nq = q_number(n, q);
    eta * nq * m_poly(n, t, params).eval(x)
        + (1.0 + eta * theta * q_number(n - 1, q)) * nq * m_poly(n - 1, t, params).eval(x)
}

/// `H_t(p)(x)` as an integral of the divided difference against
/// [`BiPoissonParams::h_measure`].
pub fn h_integral(p: &QPolynomial, x: f64, t: f64, params: &BiPoissonParams) -> Result<f64> {
    let dd = p.divided_difference(x);
    let nu = params.h_measure(x, t)?;
    Ok((1.0 + params.eta * x) * nu.expect_adaptive(|y| dd.eval(y), 1e-13)?)
}

/// Infinitesimal generator `A_t(p)(x)`.
pub fn generator_a(p: &QPolynomial, x: f64, t: f64, params: &BiPoissonParams) -> Result<f64> {
    let dd = p.divided_difference_dx(x);
    let nu = params.h_measure(x, t)?;
    Ok((1.0 + params.eta * x) * nu.expect_adaptive(|y| dd.eval(y), 1e-13)?)
}

/// `pi_1` at `q = 0` from its closed form; needs `alpha, beta > 1/2` so
/// that there are no atoms.
pub fn pi1_density(params: &BiPoissonParams) -> Result<MixedMeasure> {
    if params.q != 0.0 || params.alpha <= 0.5 || params.beta <= 0.5 {
        return Err(AsepError::ParameterOutOfRange(format!(
            "closed-form pi_1 needs q = 0 and alpha, beta > 1/2, got q = {}, alpha = {}, beta = {}",
            params.q, params.alpha, params.beta
        )));
    }
    let BiPoissonParams { eta, theta, .. } = *params;
    let r2 = 4.0 * (1.0 + eta * theta);
    let density = move |x: f64| {
        let u = r2 - (x - eta - theta).powi(2);
        if u <= 0.0 {
            0.0
        } else {
            u.sqrt() / (2.0 * PI * (1.0 + eta * x) * (1.0 + theta * x))
        }
    };
    let cont = Continuous::from_density(density, eta + theta, r2.sqrt());
    MixedMeasure::new(Some(cont), Vec::new())
}

/// `<tau_j>_N - <tau_{j+1}>_N` from the double integral over `pi_1` and
/// the `H_1` measure.
pub fn tau_diff_integral(alpha: f64, beta: f64, q: f64, n: usize, j: usize) -> Result<f64> {
    if j == 0 || j >= n {
        return Err(AsepError::IndexOutOfRange {
            index: j,
            lo: 1,
            hi: n.saturating_sub(1),
        });
    }
    let params = eta_theta(alpha, beta, q)?;
    params.aw()?.check_fan()?;
    let pi1 = params.marginal(1.0)?;
    let ell = |x: f64| params.linear_form(1.0, x);
    let inner_power = (n - j - 1) as i32;
    let failure = std::cell::OnceCell::new();
    let numerator = pi1.expect(|x| {
        let inner = params
            .h_measure(x, 1.0)
            .and_then(|nu| nu.expect_adaptive(|y| ell(y).powi(inner_power), 1e-13));
        match inner {
            Ok(v) => v * ell(x).powi(j as i32 - 1) * (1.0 + params.eta * x),
            Err(e) => {
                let _ = failure.set(e);
                0.0
            }
        }
    });
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let denominator = pi1.expect(|x| ell(x).powi(n as i32));
    Ok((alpha + beta + q - 1.0) / (alpha * beta) * numerator / denominator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::profile_exact;
    use approx::assert_relative_eq;

    #[test]
    fn eta_theta_values() {
        let p = eta_theta(1.0, 1.0, 0.0).unwrap();
        assert_eq!((p.eta, p.theta), (0.0, 0.0));
        let p = eta_theta(0.9, 0.4, 0.3).unwrap();
        let r = eta_theta(0.4, 0.9, 0.3).unwrap();
        assert_relative_eq!(p.eta, r.theta, epsilon = 1e-15);
        assert_relative_eq!(p.theta, r.eta, epsilon = 1e-15);
        assert!(eta_theta(0.2, 0.3, 0.1).is_err());
    }

    #[test]
    fn closed_form_matches_general_constants() {
        for &(al, be, q) in &[
            (0.3, 0.9, 0.0),
            (0.9, 0.3, 0.2),
            (1.4, 1.1, 0.5),
            (0.6, 0.7, 0.0),
        ] {
            let p = eta_theta(al, be, q).unwrap();
            let aw = derive_aw(&AsepParams::new(al, be, 0.0, 0.0, q).unwrap()).unwrap();
            let g = qh_constants(&aw).unwrap();
            assert_relative_eq!(p.eta, g.eta, epsilon = 1e-13);
            assert_relative_eq!(p.theta, g.theta, epsilon = 1e-13);
            assert_eq!((g.tau, g.sigma), (0.0, 0.0));
            assert_relative_eq!(g.q0, q);
            assert!(1.0 + p.eta * p.theta > q);
        }
    }

    #[test]
    fn polynomial_small_cases() {
        let p = eta_theta(0.9, 0.8, 0.4).unwrap();
        assert_eq!(m_poly(1, 0.7, &p).coeffs, vec![0.0, 1.0]);
        let m2 = m_poly(2, 0.7, &p);
        let expect = [-0.7, -(p.theta + 0.7 * p.eta), 1.0];
        for (a, b) in m2.coeffs.iter().zip(expect) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
        let q1 = q_poly(1, 0.3, 0.7, 0.2, &p);
        assert_relative_eq!(q1.eval(1.0), 0.7, epsilon = 1e-15);
        let poly = QPolynomial::new(vec![1.0, -2.0, 0.5, 3.0]);
        let (x, y) = (0.4, -1.3);
        let dd = poly.divided_difference(x).eval(y);
        assert_relative_eq!(dd, (poly.eval(y) - poly.eval(x)) / (y - x), epsilon = 1e-13);
        let h = 1e-6;
        let fd = (poly.divided_difference(x + h).eval(y) - poly.divided_difference(x - h).eval(y))
            / (2.0 * h);
        assert_relative_eq!(poly.divided_difference_dx(x).eval(y), fd, epsilon = 1e-7);
        let c = poly.compose_affine(2.0, -1.0);
        assert_relative_eq!(c.eval(0.3), poly.eval(-0.4), epsilon = 1e-14);
    }

    #[test]
    fn h_operator_two_ways() {
        let p = eta_theta(0.9, 0.8, 0.4).unwrap();
        let pi = p.marginal(1.0).unwrap();
        let (lo, hi) = pi.support_hull();
        for n in 0..=6 {
            for &frac in &[0.2, 0.5, 0.8] {
                let x = lo + frac * (hi - lo);
                let closed = h_closed(n, x, 1.0, &p);
                let integral = h_integral(&m_poly(n, 1.0, &p), x, 1.0, &p).unwrap();
                assert!(
                    (closed - integral).abs() < 1e-8 * (1.0 + closed.abs()),
                    "n={n} {closed} {integral}"
                );
            }
        }
        let x = 0.3;
        let h1 = h_integral(&m_poly(1, 1.0, &p), x, 1.0, &p).unwrap();
        assert_relative_eq!(h1, p.eta * x + 1.0, epsilon = 1e-12);
    }

    #[test]
    fn generator_on_martingale_polynomials() {
        let p = eta_theta(0.9, 0.8, 0.4).unwrap();
        let t = 1.0;
        for n in 0..=5 {
            let x = 0.4;
            let h = 1e-5;
            let dt = (m_poly(n, t + h, &p).eval(x) - m_poly(n, t - h, &p).eval(x)) / (2.0 * h);
            let a = generator_a(&m_poly(n, t, &p), x, t, &p).unwrap();
            assert!(
                (a + dt).abs() < 1e-7 * (1.0 + dt.abs()),
                "n={n}: {a} vs {}",
                -dt
            );
        }
        let m2 = m_poly(2, t, &p);
        let x = 0.4;
        assert_relative_eq!(
            generator_a(&m2, x, t, &p).unwrap(),
            p.eta * x + 1.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn generator_matches_finite_difference() {
        let p = eta_theta(0.9, 0.8, 0.4).unwrap();
        let poly = QPolynomial::new(vec![0.3, -1.0, 0.5, 0.2]);
        let (t, x, dt) = (1.0, 0.4, 1e-3);
        let later = p.transition(t, t + dt, x).unwrap();
        let fd = (later.expect_adaptive(|y| poly.eval(y), 1e-14).unwrap() - poly.eval(x)) / dt;
        let a = generator_a(&poly, x, t, &p).unwrap();
        assert!((fd - a).abs() < 1e-3 * (1.0 + a.abs()), "{fd} vs {a}");
    }

    #[test]
    fn kernel_properties() {
        let p = eta_theta(0.9, 0.8, 0.4).unwrap();
        let (s, t) = (0.6, 1.3);
        let pis = p.marginal(s).unwrap();
        let (lo, hi) = pis.support_hull();
        for &frac in &[0.1, 0.5, 0.9] {
            let x = lo + frac * (hi - lo);
            let k = p.transition(s, t, x).unwrap();
            let var = k.expect_adaptive(|y| (y - x) * (y - x), 1e-14).unwrap();
            assert_relative_eq!(var, (t - s) * (1.0 + p.eta * x), max_relative = 1e-8);
            for n in 0..=4 {
                let mt = m_poly(n, t, &p);
                let v = k.expect(|y| mt.eval(y));
                let expect = m_poly(n, s, &p).eval(x);
                assert!((v - expect).abs() < 1e-8 * (1.0 + expect.abs()));
            }
            // Orthogonality of the Q family under the same kernel.
            let qs: Vec<QPolynomial> = (0..=4).map(|n| q_poly(n, x, t, s, &p)).collect();
            for a in 0..=4 {
                for b in (a + 1)..=4 {
                    let g = k.expect(|y| qs[a].eval(y) * qs[b].eval(y));
                    assert!(g.abs() < 1e-8, "({a},{b}) {g}");
                }
            }
        }
    }

    #[test]
    fn marginal_from_time_zero() {
        let p = eta_theta(0.9, 0.8, 0.4).unwrap();
        let direct = p.marginal(1.0).unwrap();
        let from_zero = p.transition(0.0, 1.0, 0.0).unwrap();
        for k in 1..=4 {
            let a = direct.expect(|x| x.powi(k));
            let b = from_zero.expect(|x| x.powi(k));
            assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
            let z = direct.expect(|x| ((1.0 - p.q) * p.linear_form(1.0, x)).powi(k));
            let zz = marginal_z(&p.aw().unwrap(), 1.0)
                .unwrap()
                .expect(|w| (2.0 + w).powi(k));
            assert!((z - zz).abs() < 1e-8 * (1.0 + z.abs()));
        }
    }

    #[test]
    fn pi1_semicircle_and_q0_factor() {
        let p = eta_theta(1.0, 1.0, 0.0).unwrap();
        let pi = pi1_density(&p).unwrap();
        assert_relative_eq!(pi.total_mass(), 1.0, epsilon = 1e-13);
        assert_relative_eq!(pi.expect(|x| x * x), 1.0, epsilon = 1e-13);
        let p = eta_theta(0.8, 0.7, 0.0).unwrap();
        let closed = pi1_density(&p).unwrap();
        let built = p.marginal(1.0).unwrap();
        for k in 1..=4 {
            assert_relative_eq!(
                closed.expect(|x| x.powi(k)),
                built.expect(|x| x.powi(k)),
                epsilon = 1e-10
            );
        }
        // P_{0,1}(theta, dy) = (1 + theta y) pi_1(dy)
        let kernel = p.h_measure(0.3, 1.0).unwrap();
        for k in 0..=3 {
            let a = kernel.expect(|y| y.powi(k));
            let b = closed.expect(|y| (1.0 + p.theta * y) * y.powi(k));
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn profile_differences() {
        assert_relative_eq!(
            tau_diff_integral(1.0, 1.0, 0.0, 3, 1).unwrap(),
            1.0 / 7.0,
            epsilon = 1e-10
        );
        for &(al, be, q, n, j) in &[
            (0.9, 0.8, 0.3, 4, 2),
            (0.6, 1.2, 0.0, 5, 3),
            (0.4, 0.9, 0.5, 4, 1),
        ] {
            let asep = AsepParams::new(al, be, 0.0, 0.0, q).unwrap();
            let prof = profile_exact(&asep, n).unwrap();
            let v = tau_diff_integral(al, be, q, n, j).unwrap();
            assert!(
                (v - (prof[j - 1] - prof[j])).abs() < 1e-7,
                "{v} vs {}",
                prof[j - 1] - prof[j]
            );
        }
    }
}
