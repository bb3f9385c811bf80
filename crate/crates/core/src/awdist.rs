//! Askey-Wilson laws: q-Pochhammer products, densities, atoms and the
//! marginal and transition laws of the auxiliary process `Z_t`.
//!
//! Throughout, a measure on `[-1, 1]` is integrated in the angle variable
//! `x = cos(theta)`. After this substitution the Askey-Wilson integrand is
//! an even, `2 pi`-periodic analytic function of `theta`, so the trapezoidal
//! rule converges geometrically and nested doubling gives a cheap error
//! estimate.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{AsepError, Result};
use crate::params::AwParams;

/// Number of factors in a product `(a; q)_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terms {
    Finite(usize),
    Infinite,
}

/// Number of factors after which `|a| q^j < 1e-17`.
fn tail_len(modulus: f64, q: f64) -> usize {
    if modulus == 0.0 {
        return 0;
    }
    if q == 0.0 {
        return 1;
    }
    let target = 1e-17 / modulus.max(1.0);
    let j = (target.ln() / q.ln()).ceil();
    (j.max(0.0) as usize) + 1
}

/// `(a; q)_n = prod_{j<n} (1 - a q^j)`.
pub fn qpoch(a: f64, q: f64, n: Terms) -> f64 {
    let len = match n {
        Terms::Finite(n) => n,
        Terms::Infinite => tail_len(a.abs(), q),
    };
    let mut acc = 1.0;
    let mut term = a;
    for _ in 0..len {
        acc *= 1.0 - term;
        term *= q;
    }
    acc
}

/// Complex version of [`qpoch`].
pub fn qpoch_complex(a: Complex64, q: f64, n: Terms) -> Complex64 {
    let len = match n {
        Terms::Finite(n) => n,
        Terms::Infinite => tail_len(a.norm(), q),
    };
    let mut acc = Complex64::new(1.0, 0.0);
    let mut term = a;
    for _ in 0..len {
        acc *= 1.0 - term;
        term *= q;
    }
    acc
}

/// The last two parameters of a quadruple: either two reals or a complex
/// conjugate pair described by its sum and product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CdPair {
    Real(f64, f64),
    Conjugate { sum: f64, prod: f64 },
}

impl CdPair {
    /// Roots of `z^2 - sum z + prod`.
    pub fn from_sum_prod(sum: f64, prod: f64) -> Self {
        let disc = sum * sum - 4.0 * prod;
        if disc >= 0.0 {
            let big = 0.5 * (sum + sum.signum() * disc.sqrt());
            let small = if big == 0.0 { 0.0 } else { prod / big };
            CdPair::Real(big, small)
        } else {
            CdPair::Conjugate { sum, prod }
        }
    }

    pub fn sum(&self) -> f64 {
        match *self {
            CdPair::Real(c, d) => c + d,
            CdPair::Conjugate { sum, .. } => sum,
        }
    }

    pub fn prod(&self) -> f64 {
        match *self {
            CdPair::Real(c, d) => c * d,
            CdPair::Conjugate { prod, .. } => prod,
        }
    }

    fn complex(&self) -> [Complex64; 2] {
        match *self {
            CdPair::Real(c, d) => [Complex64::new(c, 0.0), Complex64::new(d, 0.0)],
            CdPair::Conjugate { sum, prod } => {
                let im = (prod - 0.25 * sum * sum).sqrt();
                [
                    Complex64::new(0.5 * sum, im),
                    Complex64::new(0.5 * sum, -im),
                ]
            }
        }
    }
}

/// Parameters `(a, b, c, d; q)` of one Askey-Wilson law, with `a, b` real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AwQuadruple {
    pub a: f64,
    pub b: f64,
    pub pair: CdPair,
    pub q: f64,
}

impl AwQuadruple {
    pub fn real(a: f64, b: f64, c: f64, d: f64, q: f64) -> Self {
        AwQuadruple {
            a,
            b,
            pair: CdPair::Real(c, d),
            q,
        }
    }

    /// Law of `Y_t`: parameters `(A sqrt t, B sqrt t, C / sqrt t, D / sqrt t)`.
    pub fn at_time(aw: &AwParams, t: f64) -> Self {
        let s = t.sqrt();
        AwQuadruple::real(aw.a * s, aw.b * s, aw.c / s, aw.d / s, aw.q)
    }

    fn complex(&self) -> [Complex64; 4] {
        let [c, d] = self.pair.complex();
        [
            Complex64::new(self.a, 0.0),
            Complex64::new(self.b, 0.0),
            c,
            d,
        ]
    }

    pub fn abcd(&self) -> f64 {
        self.a * self.b * self.pair.prod()
    }

    /// Real parameters of modulus larger than one.
    fn generators(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut push = |i: usize, p: f64| {
            if p.abs() > 1.0 {
                out.push((i, p));
            }
        };
        push(0, self.a);
        push(1, self.b);
        if let CdPair::Real(c, d) = self.pair {
            push(2, c);
            push(3, d);
        }
        out
    }

    /// Normalizing prefactor `(q, ab, ac, ad, bc, bd, cd)_inf / (2 pi (abcd)_inf)`.
    fn prefactor(&self) -> f64 {
        let q = self.q;
        let p = self.complex();
        let mut num = Complex64::new(qpoch(q, q, Terms::Infinite), 0.0);
        for i in 0..4 {
            for j in (i + 1)..4 {
                num *= qpoch_complex(p[i] * p[j], q, Terms::Infinite);
            }
        }
        num.re / (2.0 * PI * qpoch(self.abcd(), q, Terms::Infinite))
    }

    /// Angular integrand: `f(cos theta) sin theta`.
    pub fn angular_density(&self) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
        let q = self.q;
        let pref = self.prefactor();
        // Factors p q^k for every parameter.
        let mut scaled: Vec<Complex64> = Vec::new();
        for p in self.complex() {
            let mut term = p;
            for _ in 0..tail_len(p.norm(), q) {
                scaled.push(term);
                term *= q;
            }
        }
        let qpow: Vec<f64> = {
            let n = tail_len(1.0, q);
            let mut v = Vec::with_capacity(n);
            let mut term = q;
            for _ in 1..n {
                v.push(term);
                term *= q;
            }
            v
        };
        move |theta: f64| {
            let (s, c) = theta.sin_cos();
            let e = Complex64::new(c, s);
            let c2 = 2.0 * c * c - 1.0;
            let mut num = 4.0 * s * s;
            for &qk in &qpow {
                num *= 1.0 - 2.0 * qk * c2 + qk * qk;
            }
            let mut den = 1.0;
            for &pk in &scaled {
                den *= (1.0 - pk * e).norm_sqr();
            }
            pref * num / den
        }
    }

    /// Atoms in the `[-1, 1]` coordinate.
    pub fn atoms(&self) -> Result<Vec<Atom>> {
        let q = self.q;
        let mut gens = Vec::new();
        for (i, g) in self.generators() {
            if g.abs() - 1.0 <= 1e-12 {
                log::warn!("dropping atom generator {g} within 1e-12 of the support edge");
                continue;
            }
            gens.push((i, g));
        }
        for (k, &(_, g1)) in gens.iter().enumerate() {
            for &(_, g2) in &gens[k + 1..] {
                if g1 * g2 >= 1.0 {
                    return Err(AsepError::UnsupportedAtomConfiguration(format!(
                        "generators {g1} and {g2} have product >= 1"
                    )));
                }
            }
        }
        let all = self.complex();
        let mut out = Vec::new();
        for (idx, g) in gens {
            let others: Vec<Complex64> = (0..4).filter(|&i| i != idx).map(|i| all[i]).collect();
            let gc = Complex64::new(g, 0.0);
            let mut num = Complex64::new(qpoch(1.0 / (g * g), q, Terms::Infinite), 0.0);
            num *= qpoch_complex(others[0] * others[1], q, Terms::Infinite);
            num *= qpoch_complex(others[0] * others[2], q, Terms::Infinite);
            num *= qpoch_complex(others[1] * others[2], q, Terms::Infinite);
            let mut den = qpoch_complex(gc * others[0] * others[1] * others[2], q, Terms::Infinite);
            for o in &others {
                den *= qpoch_complex(o / g, q, Terms::Infinite);
            }
            let p0 = (num / den).re;

            let mut j = 0usize;
            let mut gq = g;
            while gq.abs() > 1.0 + 1e-12 {
                let factor = if j == 0 {
                    1.0
                } else {
                    let qj = q.powi(j as i32);
                    let mut f = qpoch(g * g, q, Terms::Finite(j)) * (1.0 - g * g * qj * qj)
                        / (qpoch(q, q, Terms::Finite(j)) * (1.0 - g * g))
                        * (q / g).powi(j as i32);
                    let mut prod = Complex64::new(1.0, 0.0);
                    for o in &others {
                        let mut qi = 1.0;
                        for _ in 0..j {
                            prod *= (1.0 - gc * o * qi) / (o - gc * qi * q);
                            qi *= q;
                        }
                    }
                    f *= prod.re;
                    f
                };
                out.push(Atom {
                    location: 0.5 * (gq + 1.0 / gq),
                    mass: p0 * factor,
                });
                j += 1;
                gq *= q;
                if q == 0.0 {
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Some product of two real parameters equals one; the law then
    /// collapses to a point mass.
    fn is_degenerate(&self) -> bool {
        let CdPair::Real(c, d) = self.pair else {
            return false;
        };
        let p = [self.a, self.b, c, d];
        (0..4).any(|i| ((i + 1)..4).any(|j| (p[i] * p[j] - 1.0).abs() <= 1e-12))
    }

    /// Real parameters within `1e-12` of `+-1` moved onto it; the same
    /// threshold decides when a generator stops producing an atom.
    fn snapped(&self) -> Self {
        let snap = |p: f64| {
            if (p.abs() - 1.0).abs() <= 1e-12 {
                p.signum()
            } else {
                p
            }
        };
        let pair = match self.pair {
            CdPair::Real(c, d) => CdPair::Real(snap(c), snap(d)),
            other => other,
        };
        AwQuadruple {
            a: snap(self.a),
            b: snap(self.b),
            pair,
            q: self.q,
        }
    }

    /// The law on `[-1, 1]` (continuous part plus atoms).
    pub fn law(&self) -> Result<MixedMeasure> {
        let quad = self.snapped();
        quad.law_exact()
    }

    fn law_exact(&self) -> Result<MixedMeasure> {
        if self.is_degenerate() {
            // Point mass at the mean, the first diagonal Jacobi entry.
            let b0 = crate::ansatz::aw_recurrence_coeffs(0, self)?.b;
            return Ok(MixedMeasure::atomic(vec![Atom {
                location: 0.5 * b0,
                mass: 1.0,
            }]));
        }
        let continuous = Continuous {
            integrand: Arc::new(self.angular_density()),
            center: 0.0,
            half_width: 1.0,
        };
        MixedMeasure::new(Some(continuous), self.atoms()?)
    }
}

/// Askey-Wilson density on `|x| < 1`.
pub fn aw_density(x: f64, quad: &AwQuadruple) -> Result<f64> {
    if !(x.abs() < 1.0) {
        return Err(AsepError::DomainError(format!(
            "|x| = {} must be < 1",
            x.abs()
        )));
    }
    let g = quad.angular_density();
    Ok(g(x.acos()) / (1.0 - x * x).sqrt())
}

/// Atom list of the Askey-Wilson law.
pub fn aw_atoms(quad: &AwQuadruple) -> Result<Vec<Atom>> {
    quad.atoms()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Continuous part written as `x = center + half_width cos(theta)`, with
/// `integrand(theta)` the density with respect to `d theta` on `(0, pi)`.
#[derive(Clone)]
pub struct Continuous {
    pub integrand: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub center: f64,
    pub half_width: f64,
}

impl Continuous {
    /// Continuous part from a density in `x` on `[center - hw, center + hw]`.
    pub fn from_density<F>(density: F, center: f64, half_width: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let integrand = move |theta: f64| {
            let (s, c) = theta.sin_cos();
            density(center + half_width * c) * half_width.abs() * s
        };
        Continuous {
            integrand: Arc::new(integrand),
            center,
            half_width,
        }
    }
}

const START_INTERVALS: usize = 64;
const MAX_INTERVALS: usize = 1 << 19;
const MASS_TOL: f64 = 1e-15;

/// Relative rounding floor of an `n`-point sum; sharply peaked kernels
/// (short transition times) cannot be resolved below it.
fn rounding_floor(n: usize) -> f64 {
    8.0 * f64::EPSILON * (n as f64).sqrt()
}

/// Angles of the trapezoidal rule on `[0, pi]` with `n` intervals.
fn rule_angles(n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |k| PI * k as f64 / n as f64)
}

/// Trapezoidal weight of node `k` out of `0..=n`.
fn rule_weight(k: usize, n: usize) -> f64 {
    let h = PI / n as f64;
    if k == 0 || k == n {
        0.5 * h
    } else {
        h
    }
}

/// `g(theta)`, read just inside `[0, pi]` when the formula is `0/0` at an
/// end (a parameter equal to one); `g` is even about both ends, so the
/// offset costs `O(1e-14)` relative.
fn sample(g: &dyn Fn(f64) -> f64, theta: f64) -> f64 {
    let v = g(theta);
    if v.is_finite() {
        return v;
    }
    let inside = if theta < 0.5 * PI {
        theta + 1e-7
    } else {
        theta - 1e-7
    };
    g(inside)
}

/// A probability law made of a continuous part and finitely many atoms.
///
/// Quadrature nodes are resolved once at construction; [`expect`] uses
/// them and [`expect_adaptive`] refines further on demand.
///
/// [`expect`]: MixedMeasure::expect
/// [`expect_adaptive`]: MixedMeasure::expect_adaptive
#[derive(Clone)]
pub struct MixedMeasure {
    continuous: Option<Continuous>,
    atoms: Vec<Atom>,
    intervals: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    total_mass: f64,
}

impl std::fmt::Debug for MixedMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MixedMeasure")
            .field("support", &self.continuous_support())
            .field("atoms", &self.atoms)
            .field("nodes", &self.nodes.len())
            .field("total_mass", &self.total_mass)
            .finish()
    }
}

impl MixedMeasure {
    pub fn new(continuous: Option<Continuous>, atoms: Vec<Atom>) -> Result<Self> {
        let mut m = MixedMeasure {
            continuous,
            atoms,
            intervals: 0,
            nodes: Vec::new(),
            weights: Vec::new(),
            total_mass: 0.0,
        };
        m.resolve()?;
        Ok(m)
    }

    /// Pure point law.
    pub fn atomic(atoms: Vec<Atom>) -> Self {
        let total_mass = atoms.iter().map(|a| a.mass).sum();
        MixedMeasure {
            continuous: None,
            atoms,
            intervals: 0,
            nodes: Vec::new(),
            weights: Vec::new(),
            total_mass,
        }
    }

    fn resolve(&mut self) -> Result<()> {
        let atom_mass: f64 = self.atoms.iter().map(|a| a.mass).sum();
        let Some(cont) = &self.continuous else {
            self.total_mass = atom_mass;
            return Ok(());
        };
        let g = cont.integrand.clone();
        let trapezoid = |values: &[f64], n: usize| -> f64 {
            values
                .iter()
                .enumerate()
                .map(|(k, v)| v * rule_weight(k, n))
                .sum()
        };
        let mut n = START_INTERVALS;
        let mut values: Vec<f64> = rule_angles(n).map(|th| sample(&*g, th)).collect();
        let mut prev = trapezoid(&values, n);
        loop {
            if n >= MAX_INTERVALS {
                return Err(AsepError::QuadratureFailure(format!(
                    "continuous mass not converged with {n} intervals"
                )));
            }
            // Nested refinement: keep old values, add the odd midpoints.
            let fine = 2 * n;
            let mut merged = Vec::with_capacity(fine + 1);
            for k in 0..=fine {
                if k % 2 == 0 {
                    merged.push(values[k / 2]);
                } else {
                    merged.push(sample(&*g, PI * k as f64 / fine as f64));
                }
            }
            values = merged;
            n = fine;
            let cur = trapezoid(&values, n);
            let converged =
                (cur - prev).abs() <= MASS_TOL.max(rounding_floor(n)) * cur.abs().max(1e-3);
            prev = cur;
            if converged {
                break;
            }
        }
        if values.iter().any(|v| !v.is_finite() || *v < -1e-300) {
            return Err(AsepError::QuadratureFailure(
                "density is negative or non-finite on a node".into(),
            ));
        }
        self.intervals = n;
        self.nodes = rule_angles(n)
            .map(|th| cont.center + cont.half_width * th.cos())
            .collect();
        self.weights = values
            .iter()
            .enumerate()
            .map(|(k, v)| v * rule_weight(k, n))
            .collect();
        self.total_mass = prev + atom_mass;
        Ok(())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Cached `integral of density + sum of atom masses`.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn continuous_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Interval carrying the continuous part, if any.
    pub fn continuous_support(&self) -> Option<(f64, f64)> {
        self.continuous.as_ref().map(|c| {
            let (a, b) = (c.center - c.half_width, c.center + c.half_width);
            (a.min(b), a.max(b))
        })
    }

    /// Smallest interval containing every quadrature node, the continuous
    /// support and all atoms.
    pub fn support_hull(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if let Some((a, b)) = self.continuous_support() {
            lo = a;
            hi = b;
        }
        for a in &self.atoms {
            lo = lo.min(a.location);
            hi = hi.max(a.location);
        }
        (lo, hi)
    }

    /// `integral h d(measure)` with the resolved rule.
    pub fn expect<F: Fn(f64) -> f64>(&self, h: F) -> f64 {
        let cont: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * h(x))
            .sum();
        cont + self
            .atoms
            .iter()
            .map(|a| a.mass * h(a.location))
            .sum::<f64>()
    }

    /// Like [`expect`](Self::expect) but keeps doubling the rule until two
    /// successive values agree to `tol` relative to `integral |h|`.
    pub fn expect_adaptive<F: Fn(f64) -> f64>(&self, h: F, tol: f64) -> Result<f64> {
        let atom_part: f64 = self.atoms.iter().map(|a| a.mass * h(a.location)).sum();
        let atom_abs: f64 = self
            .atoms
            .iter()
            .map(|a| (a.mass * h(a.location)).abs())
            .sum();
        let Some(cont) = &self.continuous else {
            return Ok(atom_part);
        };
        let g = &*cont.integrand;
        let point = |th: f64| sample(g, th) * h(cont.center + cont.half_width * th.cos());
        let mut n = self.intervals.max(START_INTERVALS);
        // Interior sum and the two half-weighted ends, kept apart so that
        // refinement only adds midpoints.
        let ends = 0.5 * (point(0.0) + point(PI));
        let ends_abs = 0.5 * (point(0.0).abs() + point(PI).abs());
        let mut sum: f64 = (1..n).map(|k| point(PI * k as f64 / n as f64)).sum();
        let mut abs_sum: f64 = (1..n).map(|k| point(PI * k as f64 / n as f64).abs()).sum();
        let mut prev = (sum + ends) * PI / n as f64;
        while n < MAX_INTERVALS {
            let fine = 2 * n;
            for k in 0..n {
                let v = point(PI * (2 * k + 1) as f64 / fine as f64);
                sum += v;
                abs_sum += v.abs();
            }
            n = fine;
            let cur = (sum + ends) * PI / n as f64;
            let scale = (abs_sum + ends_abs) * PI / n as f64 + atom_abs;
            if (cur - prev).abs() <= tol.max(rounding_floor(n)) * scale.max(1e-300) {
                return Ok(cur + atom_part);
            }
            prev = cur;
        }
        Err(AsepError::QuadratureFailure(format!(
            "expectation not converged with {n} intervals"
        )))
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x) / self.total_mass
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m)) / self.total_mass
    }

    /// Image under `x -> scale x + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> MixedMeasure {
        let continuous = self.continuous.as_ref().map(|c| Continuous {
            integrand: c.integrand.clone(),
            center: scale * c.center + shift,
            half_width: scale * c.half_width,
        });
        MixedMeasure {
            continuous,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    location: scale * a.location + shift,
                    mass: a.mass,
                })
                .collect(),
            intervals: self.intervals,
            nodes: self.nodes.iter().map(|x| scale * x + shift).collect(),
            weights: self.weights.clone(),
            total_mass: self.total_mass,
        }
    }

    /// Values of `h` on every node and atom (for range checks).
    pub fn all_points(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes
            .iter()
            .copied()
            .chain(self.atoms.iter().map(|a| a.location))
    }
}

/// Law of `sqrt(1-q) Z_t`.
pub fn marginal_z(aw: &AwParams, t: f64) -> Result<MixedMeasure> {
    aw.check_fan()?;
    marginal_z_unchecked(aw, t)
}

pub(crate) fn marginal_z_unchecked(aw: &AwParams, t: f64) -> Result<MixedMeasure> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(AsepError::DomainError(format!(
            "time t = {t} must be positive"
        )));
    }
    let law = AwQuadruple::at_time(aw, t).law()?;
    Ok(law.affine(2.0 * t.sqrt(), 0.0))
}

/// Quadruple of the transition law from `sqrt(1-q) Z_s = w` to time `t`.
pub fn transition_quadruple(aw: &AwParams, s: f64, t: f64, w: f64) -> AwQuadruple {
    let st = t.sqrt();
    AwQuadruple {
        a: aw.a * st,
        b: aw.b * st,
        pair: CdPair::from_sum_prod(w / st, s / t),
        q: aw.q,
    }
}

/// Conditional law of `sqrt(1-q) Z_t` given `sqrt(1-q) Z_s = w`.
pub fn transition_z(aw: &AwParams, s: f64, t: f64, w: f64) -> Result<MixedMeasure> {
    aw.check_fan()?;
    if !(s > 0.0 && s < t && t.is_finite()) {
        return Err(AsepError::DomainError(format!(
            "transition needs 0 < s < t, got s = {s}, t = {t}"
        )));
    }
    let env = SupportEnvelope::new(aw);
    let slack = 1e-9 * (1.0 + w.abs());
    if w > env.upper(s) + slack || w < env.lower(s) - slack {
        return Err(AsepError::DomainError(format!(
            "starting point {w} lies outside the support [{}, {}] at time {s}",
            env.lower(s),
            env.upper(s)
        )));
    }
    transition_law(aw, s, t, w)
}

/// Transition law without support or fan checks; `s = 0` is allowed.
pub(crate) fn transition_law(aw: &AwParams, s: f64, t: f64, w: f64) -> Result<MixedMeasure> {
    let law = transition_quadruple(aw, s, t, w).law()?;
    Ok(law.affine(2.0 * t.sqrt(), 0.0))
}

/// Upper and lower bounds of the support of `sqrt(1-q) Z_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportEnvelope {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl SupportEnvelope {
    pub fn new(aw: &AwParams) -> Self {
        SupportEnvelope {
            a: aw.a,
            b: aw.b,
            c: aw.c,
            d: aw.d,
        }
    }

    pub fn upper(&self, t: f64) -> f64 {
        if self.c > 0.0 && t <= self.c * self.c {
            self.c + t / self.c
        } else if self.a > 0.0 && t >= 1.0 / (self.a * self.a) {
            self.a * t + 1.0 / self.a
        } else {
            2.0 * t.sqrt()
        }
    }

    pub fn lower(&self, t: f64) -> f64 {
        if self.d < 0.0 && t <= self.d * self.d {
            self.d + t / self.d
        } else if self.b < 0.0 && t >= 1.0 / (self.b * self.b) {
            self.b * t + 1.0 / self.b
        } else {
            -2.0 * t.sqrt()
        }
    }
}

pub fn support_envelope(aw: &AwParams) -> Result<SupportEnvelope> {
    aw.check_fan()?;
    Ok(SupportEnvelope::new(aw))
}

/// `E[(1 + t + sqrt(1-q) Z_t)^n]`.
pub fn moment_power(aw: &AwParams, t: f64, n: u32) -> Result<f64> {
    let m = marginal_z(aw, t)?;
    Ok(m.expect(|z| (1.0 + t + z).powi(n as i32)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn qpoch_basics() {
        assert_eq!(qpoch(0.7, 0.3, Terms::Finite(0)), 1.0);
        assert_relative_eq!(qpoch(0.7, 0.0, Terms::Infinite), 0.3, epsilon = 1e-16);
        let brute: f64 = (0..60).map(|j| 1.0 - 0.5 * 0.5f64.powi(j)).product();
        assert_relative_eq!(
            qpoch(0.5, 0.5, Terms::Infinite),
            brute,
            max_relative = 1e-15
        );
        let z = qpoch_complex(Complex64::new(0.5, 0.0), 0.5, Terms::Infinite);
        assert_relative_eq!(z.re, brute, max_relative = 1e-15);
    }

    #[test]
    fn semicircle_density() {
        let quad = AwQuadruple::real(0.0, 0.0, 0.0, 0.0, 0.0);
        for &x in &[-0.9, -0.3, 0.0, 0.5, 0.99] {
            let f = aw_density(x, &quad).unwrap();
            assert_relative_eq!(f, 2.0 * (1.0f64 - x * x).sqrt() / PI, max_relative = 1e-14);
        }
        assert!(aw_density(1.0, &quad).is_err());
    }

    #[test]
    fn single_atom_example() {
        let quad = AwQuadruple::real(2.0, 0.0, 0.0, 0.0, 0.0);
        let atoms = quad.atoms().unwrap();
        assert_eq!(atoms.len(), 1);
        assert_relative_eq!(atoms[0].location, 1.25, epsilon = 1e-15);
        assert_relative_eq!(atoms[0].mass, 0.75, epsilon = 1e-15);
        let law = quad.law().unwrap();
        assert_relative_eq!(law.total_mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn atom_count_respects_threshold() {
        let quad = AwQuadruple::real(2.0, 0.0, 0.0, 0.0, 0.6);
        // 2 * 0.6 = 1.2 > 1 but 2 * 0.36 < 1.
        assert_eq!(quad.atoms().unwrap().len(), 2);
        let quad = AwQuadruple::real(0.9, -0.5, 0.3, 0.0, 0.6);
        assert!(quad.atoms().unwrap().is_empty());
    }

    #[test]
    fn masses_sum_to_one() {
        let cases = [
            AwQuadruple::real(0.5, -0.3, 0.7, -0.2, 0.4),
            AwQuadruple::real(1.8, -0.4, 0.2, -0.6, 0.5),
            AwQuadruple::real(3.0, 0.0, 0.1, 0.0, 0.7),
            AwQuadruple::real(0.3, -2.5, 1.6, -0.1, 0.3),
            AwQuadruple {
                a: 0.6,
                b: -0.2,
                pair: CdPair::from_sum_prod(0.4, 0.5),
                q: 0.3,
            },
            AwQuadruple {
                a: 1.7,
                b: -0.2,
                pair: CdPair::from_sum_prod(-0.9, 0.35),
                q: 0.5,
            },
        ];
        for quad in cases {
            let law = quad.law().unwrap();
            assert!(
                (law.total_mass() - 1.0).abs() < 1e-10,
                "{quad:?}: mass {}",
                law.total_mass()
            );
        }
    }

    #[test]
    fn marginal_atom_matches_envelope() {
        // alpha = 0.4, beta = 1 gives C = 1.5.
        let aw = AwParams::new(0.0, 0.0, 1.5, 0.0, 0.0);
        let m = marginal_z(&aw, 1.0).unwrap();
        assert_eq!(m.atoms().len(), 1);
        assert_relative_eq!(m.atoms()[0].location, 1.5 + 1.0 / 1.5, epsilon = 1e-14);
        assert_relative_eq!(SupportEnvelope::new(&aw).upper(1.0), 1.5 + 1.0 / 1.5);
        assert_relative_eq!(m.total_mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn semicircle_moments_are_catalan() {
        let aw = AwParams::new(0.0, 0.0, 0.0, 0.0, 0.0);
        let cat = [1.0, 2.0, 5.0, 14.0, 42.0, 132.0];
        for (n, &c) in cat.iter().enumerate() {
            assert_relative_eq!(
                moment_power(&aw, 1.0, n as u32).unwrap(),
                c,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn pair_from_sum_prod() {
        assert_eq!(CdPair::from_sum_prod(3.0, 2.0), CdPair::Real(2.0, 1.0));
        assert!(matches!(
            CdPair::from_sum_prod(0.0, 0.25),
            CdPair::Conjugate { .. }
        ));
        assert_eq!(CdPair::from_sum_prod(1.5, 0.0), CdPair::Real(1.5, 0.0));
    }

    #[test]
    fn parameter_on_the_unit_circle() {
        // The density stays positive at the edge; the ends of the rule matter.
        for c in [1.0, 1.0 + 2e-16, -1.0] {
            let law = AwQuadruple::real(0.21, -0.08, c, -0.29, 0.1).law().unwrap();
            assert_relative_eq!(law.total_mass(), 1.0, epsilon = 1e-13);
            assert!(law.atoms().is_empty());
        }
    }

    #[test]
    fn vanishing_expectation_converges() {
        let law = AwQuadruple::real(0.0, 0.0, 0.0, 0.0, 0.0).law().unwrap();
        let odd = law.expect_adaptive(|x| x * x * x - 0.5 * x, 1e-13).unwrap();
        assert!(odd.abs() < 1e-14);
    }
}
