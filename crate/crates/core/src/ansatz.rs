//! Matrix product representation of the stationary measure built from the
//! Jacobi matrix of the Askey-Wilson martingale polynomials.

use serde::Serialize;

use crate::awdist::AwQuadruple;
use crate::error::{AsepError, Result};
use crate::params::{derive_aw, AsepParams, AwParams};

/// One row of the three-term recurrence
/// `2x w_n = abar_n w_{n+1} + b_n w_n + cbar_n w_{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecurrenceCoeffs {
    pub abar: f64,
    pub b: f64,
    pub cbar: f64,
}

const DEGENERATE_TOL: f64 = 1e-14;

fn guard(value: f64, n: usize, factor: &'static str) -> Result<f64> {
    if value.abs() < DEGENERATE_TOL {
        Err(AsepError::DegenerateDenominator { n, factor })
    } else {
        Ok(value)
    }
}

/// Askey-Wilson recurrence coefficients at index `n`.
///
/// The `a + 1/a` term of the diagonal coefficient is cancelled analytically,
/// so `a = 0` is a regular point.
pub fn aw_recurrence_coeffs(n: usize, quad: &AwQuadruple) -> Result<RecurrenceCoeffs> {
    let AwQuadruple { a, b, pair, q } = *quad;
    let (sum, prod) = (pair.sum(), pair.prod());
    // Elementary symmetric functions of (b, c, d).
    let s1 = b + sum;
    let s2 = b * sum + prod;
    let e = b * prod;
    let abcd = a * e;
    // (1 - p c q^k)(1 - p d q^k) for real p.
    let pair_factor = |p: f64, qk: f64| 1.0 - p * sum * qk + p * p * prod * qk * qk;

    if n == 0 {
        let den = guard(1.0 - abcd, 0, "1 - abcd")?;
        return Ok(RecurrenceCoeffs {
            abar: (1.0 - a * b) / den,
            b: a + (s1 - e - a * s2 + a * a * e) / den,
            cbar: 0.0,
        });
    }

    let qp = |k: i32| q.powi(k);
    let ni = n as i32;
    let den_a = guard(1.0 - abcd * qp(2 * ni - 1), n, "1 - abcd q^(2n-1)")?;
    let den_b = guard(1.0 - abcd * qp(2 * ni), n, "1 - abcd q^(2n)")?;
    let den_c = guard(1.0 - abcd * qp(2 * ni - 2), n, "1 - abcd q^(2n-2)")?;
    let den1 = den_a * den_b;
    let den2 = den_c * den_a;

    let abar = (1.0 - abcd * qp(ni - 1)) * (1.0 - a * b * qp(ni)) / den1;

    let n1 = qp(ni) * s1 + e * qp(ni - 1) - e * (qp(2 * ni - 1) + qp(2 * ni))
        + a * (e * e * qp(4 * ni - 1) - qp(2 * ni) * s2 - e * qp(2 * ni - 1) * s1)
        + a * a * (qp(3 * ni) * e + e * qp(3 * ni - 1) * s2)
        - a * a * a * e * e * qp(4 * ni - 1);
    let q1 = qp(ni - 1);
    let tail = (1.0 - qp(ni)) * pair_factor(b, q1) * (1.0 - prod * q1) / den2;
    let bn = a + n1 / den1 - a * tail;

    let cbar = (1.0 - qp(ni)) * pair_factor(a, q1) * pair_factor(b, q1) * (1.0 - prod * q1) / den2;

    Ok(RecurrenceCoeffs { abar, b: bn, cbar })
}

/// Tridiagonal matrix stored by bands; `sub[i]` is entry `(i+1, i)` and
/// `sup[i]` is entry `(i, i+1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(dim: usize) -> Self {
        Tridiagonal {
            sub: vec![0.0; dim.saturating_sub(1)],
            diag: vec![0.0; dim],
            sup: vec![0.0; dim.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i == j + 1 {
            self.sub[j]
        } else if j == i + 1 {
            self.sup[i]
        } else {
            0.0
        }
    }

    /// `c1 self + c2 other + c0 I`.
    pub fn combine(&self, c1: f64, other: &Tridiagonal, c2: f64, c0: f64) -> Tridiagonal {
        let mix = |u: &[f64], v: &[f64]| -> Vec<f64> {
            u.iter().zip(v).map(|(x, y)| c1 * x + c2 * y).collect()
        };
        let mut diag = mix(&self.diag, &other.diag);
        diag.iter_mut().for_each(|d| *d += c0);
        Tridiagonal {
            sub: mix(&self.sub, &other.sub),
            diag,
            sup: mix(&self.sup, &other.sup),
        }
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, v: &[f64], out: &mut [f64]) {
        let m = self.dim();
        for j in 0..m {
            let mut acc = v[j] * self.diag[j];
            if j > 0 {
                acc += v[j - 1] * self.sup[j - 1];
            }
            if j + 1 < m {
                acc += v[j + 1] * self.sub[j];
            }
            out[j] = acc;
        }
    }

    /// Matrix times column vector.
    pub fn right_mul(&self, v: &[f64], out: &mut [f64]) {
        let m = self.dim();
        for i in 0..m {
            let mut acc = self.diag[i] * v[i];
            if i > 0 {
                acc += self.sub[i - 1] * v[i - 1];
            }
            if i + 1 < m {
                acc += self.sup[i] * v[i + 1];
            }
            out[i] = acc;
        }
    }

    /// Dense product, for identity checks on small truncations.
    pub fn dense_product(&self, other: &Tridiagonal) -> Vec<Vec<f64>> {
        let m = self.dim();
        let mut out = vec![vec![0.0; m]; m];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let lo = i.saturating_sub(1).max(j.saturating_sub(1));
                let hi = (i + 1).min(j + 1).min(m - 1);
                if lo > hi {
                    continue;
                }
                *cell = (lo..=hi).map(|k| self.get(i, k) * other.get(k, j)).sum();
            }
        }
        out
    }
}

/// The pair `(x, y)` with Jacobi matrix `t x + y` for the polynomials
/// `r_n(.; t)`, truncated to `dim` rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TridiagonalPair {
    pub x: Tridiagonal,
    pub y: Tridiagonal,
    pub q: f64,
}

fn jacobi_at(aw: &AwParams, t: f64, dim: usize) -> Result<Tridiagonal> {
    let quad = AwQuadruple::at_time(aw, t);
    let scale = 1.0 / (1.0 - aw.q).sqrt();
    let st = t.sqrt();
    let mut m = Tridiagonal::zeros(dim);
    for n in 0..dim {
        let c = aw_recurrence_coeffs(n, &quad)?;
        m.diag[n] = st * c.b * scale;
        if n + 1 < dim {
            m.sub[n] = c.abar * scale;
        }
        if n > 0 {
            m.sup[n - 1] = t * c.cbar * scale;
        }
    }
    Ok(m)
}

/// Builds the pair from the Jacobi matrices at `t = 1, 2` and certifies
/// linearity at `t = 3`.
pub fn jacobi_pair(aw: &AwParams, dim: usize) -> Result<TridiagonalPair> {
    aw.check_fan()?;
    jacobi_pair_unchecked(aw, dim)
}

pub(crate) fn jacobi_pair_unchecked(aw: &AwParams, dim: usize) -> Result<TridiagonalPair> {
    if dim < 2 {
        return Err(AsepError::ParameterOutOfRange(format!(
            "truncation size {dim} must be at least 2"
        )));
    }
    let j1 = jacobi_at(aw, 1.0, dim)?;
    let j2 = jacobi_at(aw, 2.0, dim)?;
    let j3 = jacobi_at(aw, 3.0, dim)?;
    let x = j2.combine(1.0, &j1, -1.0, 0.0);
    let y = j1.combine(2.0, &j2, -1.0, 0.0);
    let predicted = x.combine(3.0, &y, 1.0, 0.0);
    let bands = |m: &Tridiagonal| -> Vec<f64> {
        m.sub.iter().chain(&m.diag).chain(&m.sup).copied().collect()
    };
    for (index, (p, e)) in bands(&predicted).iter().zip(bands(&j3)).enumerate() {
        let residual = (p - e).abs() / (1.0 + e.abs());
        if residual > 1e-10 {
            return Err(AsepError::LinearityViolation { index, residual });
        }
    }
    Ok(TridiagonalPair { x, y, q: aw.q })
}

/// `E = I/(1-q) + y/sqrt(1-q)` and `D = I/(1-q) + x/sqrt(1-q)`; the
/// boundary vectors are both the first unit vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixAnsatz {
    pub e: Tridiagonal,
    pub d: Tridiagonal,
}

impl MatrixAnsatz {
    pub fn from_pair(pair: &TridiagonalPair) -> Self {
        let q = pair.q;
        let s = 1.0 / (1.0 - q).sqrt();
        let i = 1.0 / (1.0 - q);
        let zero = Tridiagonal::zeros(pair.x.dim());
        MatrixAnsatz {
            e: pair.y.combine(s, &zero, 0.0, i),
            d: pair.x.combine(s, &zero, 0.0, i),
        }
    }

    pub fn new(asep: &AsepParams, dim: usize) -> Result<Self> {
        let aw = derive_aw(asep)?;
        Ok(Self::from_pair(&jacobi_pair(&aw, dim)?))
    }

    pub fn dim(&self) -> usize {
        self.e.dim()
    }

    /// `E + t D`.
    pub fn step(&self, t: f64) -> Tridiagonal {
        self.e.combine(1.0, &self.d, t, 0.0)
    }
}

/// Vector kept as `values * exp(log_scale)` with `max |values| = 1`.
#[derive(Debug, Clone)]
struct ScaledVec {
    values: Vec<f64>,
    log_scale: f64,
}

impl ScaledVec {
    fn unit(dim: usize) -> Self {
        let mut values = vec![0.0; dim];
        values[0] = 1.0;
        ScaledVec {
            values,
            log_scale: 0.0,
        }
    }

    fn renormalize(&mut self) {
        let m = self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if m > 0.0 && m.is_finite() {
            self.values.iter_mut().for_each(|v| *v /= m);
            self.log_scale += m.ln();
        }
    }
}

/// `<W| prod_j (E + t_j D)` as a scaled row vector, exact in its first
/// entry only: entries that cannot reach `|V>` in the remaining steps are
/// dropped so that they do not swamp the scale.
fn propagate_left(ansatz: &MatrixAnsatz, ts: &[f64]) -> ScaledVec {
    let dim = ansatz.dim();
    let mut v = ScaledVec::unit(dim);
    let mut buf = vec![0.0; dim];
    for (i, &t) in ts.iter().enumerate() {
        ansatz.step(t).left_mul(&v.values, &mut buf);
        let remaining = ts.len() - i - 1;
        buf.iter_mut().skip(remaining + 1).for_each(|x| *x = 0.0);
        std::mem::swap(&mut v.values, &mut buf);
        v.renormalize();
    }
    v
}

fn check_times(ts: &[f64]) -> Result<()> {
    match ts.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        Some(t) => Err(AsepError::DomainError(format!(
            "generating-function arguments must be nonnegative, got {t}"
        ))),
        None => Ok(()),
    }
}

/// `log <W| prod (E + t_j D) |V>`; the value must be positive.
fn log_weight(ansatz: &MatrixAnsatz, ts: &[f64]) -> f64 {
    let v = propagate_left(ansatz, ts);
    v.values[0].ln() + v.log_scale
}

/// Joint generating function `<prod_j t_j^{tau_j}>_N` of the stationary law.
pub fn joint_gf_exact(asep: &AsepParams, ts: &[f64]) -> Result<f64> {
    check_times(ts)?;
    let n = ts.len();
    let ansatz = MatrixAnsatz::new(asep, n + 2)?;
    let ones = vec![1.0; n];
    let num = propagate_left(&ansatz, ts);
    let den = propagate_left(&ansatz, &ones);
    Ok(num.values[0] / den.values[0] * (num.log_scale - den.log_scale).exp())
}

/// Joint generating function for an arbitrary (possibly non-physical)
/// quadruple; used by the semi-infinite limits.
pub(crate) fn joint_gf_quadruple(aw: &AwParams, ts: &[f64], norm: &[f64]) -> Result<f64> {
    check_times(ts)?;
    let dim = ts.len().max(norm.len()) + 2;
    let ansatz = MatrixAnsatz::from_pair(&jacobi_pair_unchecked(aw, dim)?);
    let num = propagate_left(&ansatz, ts);
    let den = propagate_left(&ansatz, norm);
    Ok(num.values[0] / den.values[0] * (num.log_scale - den.log_scale).exp())
}

/// Partition function `K_N = <W|(E+D)^N|V>` with `<W|V> = 1`.
pub fn partition(asep: &AsepParams, n: usize) -> Result<f64> {
    Ok(log_partition(asep, n)?.exp())
}

/// `log K_N`, finite for every `N` (the plain value overflows near `N ~ 500`).
pub fn log_partition(asep: &AsepParams, n: usize) -> Result<f64> {
    let ansatz = MatrixAnsatz::new(asep, n + 2)?;
    Ok(log_weight(&ansatz, &vec![1.0; n]))
}

/// `K_N` as `E[(2 + sqrt(1-q) Z_1)^N] / (1-q)^N` by quadrature of the
/// Askey-Wilson law.
pub fn partition_moment(asep: &AsepParams, n: usize) -> Result<f64> {
    let aw = derive_aw(asep)?;
    Ok(crate::awdist::moment_power(&aw, 1.0, n as u32)? / (1.0 - aw.q).powi(n as i32))
}

/// `K_N` from the single integral with rational boundary kernels, valid for
/// `q = 0` and `|A|, |B|, |C|, |D| < 1` (no atoms).
pub fn partition_kernel_integral(asep: &AsepParams, n: usize) -> Result<f64> {
    let aw = derive_aw(asep)?;
    let p = [aw.a, aw.b, aw.c, aw.d];
    if aw.q != 0.0 || p.iter().any(|v| v.abs() >= 1.0) {
        return Err(AsepError::ParameterOutOfRange(format!(
            "kernel integral needs q = 0 and |A|, |B|, |C|, |D| < 1, got {p:?}, q = {}",
            aw.q
        )));
    }
    let mut constant = 1.0 / (2.0 * std::f64::consts::PI * (1.0 - aw.abcd()));
    for i in 0..4 {
        for j in (i + 1)..4 {
            constant *= 1.0 - p[i] * p[j];
        }
    }
    let f = |th: f64| {
        let z = 2.0 * th.cos();
        let s = th.sin();
        let mut v = (2.0 + z).powi(n as i32) * 4.0 * s * s;
        for &k in &p {
            v /= 1.0 + k * k - k * z;
        }
        v
    };
    Ok(constant * crate::numeric::periodic_integral(f, 1e-14)?)
}

/// Coefficients of `<W|(E + tD)^N|V>` in powers of `t`, stored as
/// `coeffs[k] * exp(log_scale)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountPolynomial {
    pub coeffs: Vec<f64>,
    pub log_scale: f64,
}

impl CountPolynomial {
    /// `log K_N`.
    pub fn log_total(&self) -> f64 {
        self.coeffs.iter().sum::<f64>().ln() + self.log_scale
    }

    /// Law of the particle count.
    pub fn distribution(&self) -> Vec<f64> {
        let total: f64 = self.coeffs.iter().sum();
        self.coeffs.iter().map(|c| c / total).collect()
    }

    /// `log sum_k coeffs_k e^{lambda k}` relative to `log K_N`.
    pub fn log_mgf(&self, lambda: f64) -> f64 {
        let terms: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.ln() + lambda * k as f64)
            .collect();
        crate::numeric::log_sum_exp(&terms) - self.coeffs.iter().sum::<f64>().ln()
    }
}

/// Count polynomial via products of matrices with polynomial entries.
pub fn count_gf_poly(asep: &AsepParams, n: usize) -> Result<CountPolynomial> {
    if n > 400 {
        return Err(AsepError::SizeLimitExceeded { n, max: 400 });
    }
    let ansatz = MatrixAnsatz::new(asep, n + 2)?;
    let dim = ansatz.dim();
    // poly[j][k]: coefficient of t^k in entry j of the row vector.
    let mut poly = vec![vec![0.0; n + 1]; dim];
    poly[0][0] = 1.0;
    let mut log_scale = 0.0;
    let mut next = vec![vec![0.0; n + 1]; dim];
    for step in 0..n {
        for row in next.iter_mut() {
            row.iter_mut().for_each(|c| *c = 0.0);
        }
        let reach = (step + 1).min(dim - 1);
        for j in 0..=reach {
            // Column j of E and D: entries (j-1, j), (j, j), (j+1, j).
            let mut sources = vec![(j, ansatz.e.diag[j], ansatz.d.diag[j])];
            if j > 0 {
                sources.push((j - 1, ansatz.e.sup[j - 1], ansatz.d.sup[j - 1]));
            }
            if j + 1 < dim {
                sources.push((j + 1, ansatz.e.sub[j], ansatz.d.sub[j]));
            }
            for (i, ecoef, dcoef) in sources {
                for k in 0..=step {
                    let c = poly[i][k];
                    if c != 0.0 {
                        next[j][k] += c * ecoef;
                        next[j][k + 1] += c * dcoef;
                    }
                }
            }
        }
        std::mem::swap(&mut poly, &mut next);
        let m = poly
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if m > 0.0 {
            poly.iter_mut()
                .for_each(|r| r.iter_mut().for_each(|c| *c /= m));
            log_scale += m.ln();
        }
    }
    let coeffs: Vec<f64> = poly[0].iter().map(|c| c.max(0.0)).collect();
    Ok(CountPolynomial { coeffs, log_scale })
}

/// Occupation profile `<tau_j>_N` for `j = 1..=N`.
pub fn profile_exact(asep: &AsepParams, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if n > 400 {
        return Err(AsepError::SizeLimitExceeded { n, max: 400 });
    }
    let ansatz = MatrixAnsatz::new(asep, n + 2)?;
    let dim = ansatz.dim();
    let total = ansatz.step(1.0);
    // Left vectors <W|(E+D)^k and right vectors (E+D)^k|V> for k < N.
    let mut lefts = Vec::with_capacity(n);
    let mut rights = Vec::with_capacity(n);
    let mut l = ScaledVec::unit(dim);
    let mut r = ScaledVec::unit(dim);
    let mut buf = vec![0.0; dim];
    for _ in 0..n {
        lefts.push(l.clone());
        rights.push(r.clone());
        total.left_mul(&l.values, &mut buf);
        std::mem::swap(&mut l.values, &mut buf);
        l.renormalize();
        total.right_mul(&r.values, &mut buf);
        std::mem::swap(&mut r.values, &mut buf);
        r.renormalize();
    }
    let log_k = l.values[0].ln() + l.log_scale;
    let mut dr = vec![0.0; dim];
    let mut out = Vec::with_capacity(n);
    for j in 1..=n {
        let left = &lefts[j - 1];
        let right = &rights[n - j];
        ansatz.d.right_mul(&right.values, &mut dr);
        let dot: f64 = left.values.iter().zip(&dr).map(|(a, b)| a * b).sum();
        out.push(dot * (left.log_scale + right.log_scale - log_k).exp());
    }
    Ok(out)
}

/// The Catalan number `Cat(n)`.
pub fn catalan(n: usize) -> f64 {
    // Cat(n) = prod_{k=2}^n (n+k)/k, exact in binary64 up to n ~ 30.
    (2..=n).fold(1.0, |acc, k| acc * (n + k) as f64 / k as f64)
}

/// `Cat(j) Cat(N-j) / Cat(N+1)`: the step of the profile of the totally
/// asymmetric process with `alpha = beta = 1`.
pub fn catalan_diff(n: usize, j: usize) -> Result<f64> {
    if n < 2 || j < 1 || j > n - 1 {
        return Err(AsepError::IndexOutOfRange {
            index: j,
            lo: 1,
            hi: n.saturating_sub(1),
        });
    }
    // Ratio of binomials in log form so that large N stays finite.
    let log_cat = |m: usize| -> f64 {
        let mut acc = 0.0;
        for k in 2..=m {
            acc += ((m + k) as f64 / k as f64).ln();
        }
        acc
    };
    if n <= 25 {
        return Ok(catalan(j) * catalan(n - j) / catalan(n + 1));
    }
    Ok((log_cat(j) + log_cat(n - j) - log_cat(n + 1)).exp())
}

/// The three integrals of the `q = 0` factorization of the profile step and
/// the resulting difference `<tau_j> - <tau_{j+1}>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchutzFactors {
    /// Integral carrying the left boundary (through `C`), exponent `j - 1`.
    pub left: f64,
    /// Integral carrying the right boundary (through `A`), exponent `N - j - 1`.
    pub right: f64,
    /// Normalizing integral with both boundary kernels.
    pub normalizer: f64,
    pub difference: f64,
}

/// Factorized profile step for `q = 0`, `gamma = delta = 0`, `alpha, beta > 1/2`.
pub fn schutz_factors(alpha: f64, beta: f64, n: usize, j: usize) -> Result<SchutzFactors> {
    if !(alpha > 0.5 && beta > 0.5) {
        return Err(AsepError::ParameterOutOfRange(format!(
            "alpha = {alpha} and beta = {beta} must both exceed 1/2"
        )));
    }
    if n < 2 || j < 1 || j > n - 1 {
        return Err(AsepError::IndexOutOfRange {
            index: j,
            lo: 1,
            hi: n.saturating_sub(1),
        });
    }
    let c = (1.0 - alpha) / alpha;
    let a = (1.0 - beta) / beta;
    // z = 2 cos(theta): sqrt(4 - z^2) dz = 4 sin^2(theta) d(theta).
    let integral = |power: usize, kernels: &[f64]| -> Result<f64> {
        let f = |th: f64| {
            let z = 2.0 * th.cos();
            let s = th.sin();
            let mut v = (2.0 + z).powi(power as i32) * 4.0 * s * s;
            for &p in kernels {
                v /= 1.0 + p * p - p * z;
            }
            v
        };
        crate::numeric::periodic_integral(f, 1e-14)
    };
    let left = integral(j - 1, &[c])?;
    let right = integral(n - j - 1, &[a])?;
    let normalizer = integral(n, &[a, c])?;
    Ok(SchutzFactors {
        left,
        right,
        normalizer,
        difference: left * right / (2.0 * std::f64::consts::PI * normalizer),
    })
}
