//! Brute-force stationary distribution of the exclusion process on
//! `{0,1}^N`, for cross-checking the exact formulas.
//!
//! Configurations are encoded as integers with site 1 in the least
//! significant bit.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{AsepError, Result};
use crate::params::AsepParams;

pub const MAX_SITES: usize = 20;
const DENSE_LIMIT: usize = 10;

/// Occupation of site `j` (1-based) in configuration `config`.
pub fn occupied(config: usize, j: usize) -> bool {
    config >> (j - 1) & 1 == 1
}

/// `tau_1 tau_2 ... tau_N` as a string of digits, site 1 first.
pub fn config_string(config: usize, n: usize) -> String {
    (1..=n)
        .map(|j| if occupied(config, j) { '1' } else { '0' })
        .collect()
}

/// Off-diagonal rates stored per source state; the diagonal is implied.
#[derive(Debug, Clone)]
pub struct Generator {
    pub n: usize,
    /// `rows[i]` lists `(target, rate)` for every legal event from `i`.
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl Generator {
    pub fn states(&self) -> usize {
        self.rows.len()
    }

    /// Total exit rate of state `i` (minus the diagonal entry).
    pub fn exit_rate(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|(_, r)| r).sum()
    }

    /// `max_j |(pi Q)_j|`.
    pub fn balance_residual(&self, pi: &[f64]) -> f64 {
        let mut flow = vec![0.0; self.states()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, r) in row {
                flow[j] += pi[i] * r;
                flow[i] -= pi[i] * r;
            }
        }
        flow.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Rate matrix of the open-boundary process on `n` sites.
pub fn build_generator(asep: &AsepParams, n: usize) -> Result<Generator> {
    asep.validate()?;
    if n == 0 {
        return Err(AsepError::ParameterOutOfRange(
            "need at least one site".into(),
        ));
    }
    if n > MAX_SITES {
        return Err(AsepError::SizeLimitExceeded { n, max: MAX_SITES });
    }
    let states = 1usize << n;
    let mut rows = Vec::with_capacity(states);
    for c in 0..states {
        let mut row = Vec::with_capacity(n + 3);
        let mut push = |target: usize, rate: f64| {
            if rate > 0.0 {
                row.push((target, rate));
            }
        };
        let first = 1usize;
        let last = 1usize << (n - 1);
        if c & first == 0 {
            push(c | first, asep.alpha);
        } else {
            push(c & !first, asep.gamma);
        }
        if c & last == 0 {
            push(c | last, asep.delta);
        } else {
            push(c & !last, asep.beta);
        }
        for j in 0..n.saturating_sub(1) {
            let here = 1usize << j;
            let there = here << 1;
            match (c & here != 0, c & there != 0) {
                (true, false) => push(c ^ here ^ there, 1.0),
                (false, true) => push(c ^ here ^ there, asep.q),
                _ => {}
            }
        }
        rows.push(row);
    }
    Ok(Generator { n, rows })
}

/// Exact stationary distribution on `{0,1}^N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryTable {
    pub n: usize,
    pub probs: Vec<f64>,
}

/// Solves `pi Q = 0`, `sum pi = 1`.
pub fn stationary(generator: &Generator) -> Result<StationaryTable> {
    let probs = if generator.n <= DENSE_LIMIT {
        dense_solve(generator)?
    } else {
        gauss_seidel(generator)?
    };
    let residual = generator.balance_residual(&probs);
    if !(residual <= 1e-10) {
        return Err(AsepError::SingularSystem(format!(
            "balance residual {residual:e} after solve"
        )));
    }
    Ok(StationaryTable {
        n: generator.n,
        probs,
    })
}

/// Convenience wrapper: generator plus solve.
pub fn solve(asep: &AsepParams, n: usize) -> Result<StationaryTable> {
    stationary(&build_generator(asep, n)?)
}

fn dense_solve(generator: &Generator) -> Result<Vec<f64>> {
    let m = generator.states();
    // Transposed generator with the last equation replaced by normalization.
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (i, row) in generator.rows.iter().enumerate() {
        for &(j, r) in row {
            a[(j, i)] += r;
            a[(i, i)] -= r;
        }
    }
    for i in 0..m {
        a[(m - 1, i)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m);
    rhs[m - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| AsepError::SingularSystem("LU factorization is singular".into()))?;
    Ok(sol.iter().copied().collect())
}

fn gauss_seidel(generator: &Generator) -> Result<Vec<f64>> {
    let m = generator.states();
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for (i, row) in generator.rows.iter().enumerate() {
        for &(j, r) in row {
            incoming[j].push((i, r));
        }
    }
    let exit: Vec<f64> = (0..m).map(|i| generator.exit_rate(i)).collect();
    let mut pi = vec![1.0 / m as f64; m];
    for sweep in 0..200_000 {
        for j in 0..m {
            let inflow: f64 = incoming[j].iter().map(|&(i, r)| pi[i] * r).sum();
            pi[j] = inflow / exit[j];
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        if sweep % 20 == 19 && generator.balance_residual(&pi) <= 1e-12 {
            log::debug!("Gauss-Seidel converged after {} sweeps", sweep + 1);
            return Ok(pi);
        }
    }
    Err(AsepError::SingularSystem(
        "Gauss-Seidel iteration did not converge".into(),
    ))
}

impl StationaryTable {
    /// `sum_config pi(config) prod_j t_j^{tau_j}`.
    pub fn joint_gf(&self, ts: &[f64]) -> Result<f64> {
        if ts.len() != self.n {
            return Err(AsepError::LengthMismatch {
                expected: self.n,
                got: ts.len(),
            });
        }
        Ok(self
            .probs
            .iter()
            .enumerate()
            .map(|(c, p)| {
                let w: f64 = (1..=self.n)
                    .filter(|&j| occupied(c, j))
                    .map(|j| ts[j - 1])
                    .product();
                p * w
            })
            .sum())
    }

    /// `<tau_j>` for `j = 1..=N`.
    pub fn occupancy_profile(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (c, p) in self.probs.iter().enumerate() {
            for (j, slot) in out.iter_mut().enumerate() {
                if occupied(c, j + 1) {
                    *slot += p;
                }
            }
        }
        out
    }

    /// Law of the particle count `sum_j tau_j`.
    pub fn count_distribution(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        for (c, p) in self.probs.iter().enumerate() {
            out[c.count_ones() as usize] += p;
        }
        out
    }
}

/// Free function forms mirroring the table methods.
pub fn joint_gf(table: &StationaryTable, ts: &[f64]) -> Result<f64> {
    table.joint_gf(ts)
}

pub fn occupancy_profile(table: &StationaryTable) -> Vec<f64> {
    table.occupancy_profile()
}

pub fn count_distribution(table: &StationaryTable) -> Vec<f64> {
    table.count_distribution()
}
