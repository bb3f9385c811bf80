//! Event-driven (Gillespie) simulation of the open chain.
//!
//! Every possible move lives in a slot of a binary sum tree: one slot per
//! bond and one per boundary. A jump only changes the slots next to the
//! sites it touches, so each event costs `O(log N)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{AsepError, Result};
use crate::params::AsepParams;

/// Name of the random source, recorded in every result.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub asep: AsepParams,
    pub n: usize,
    pub total_time: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub batches: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.asep.validate()?;
        if self.n == 0 {
            return Err(AsepError::InvalidConfig(
                "lattice size must be positive".into(),
            ));
        }
        if !(self.burn_in >= 0.0 && self.total_time > self.burn_in && self.total_time.is_finite()) {
            return Err(AsepError::InvalidConfig(format!(
                "need 0 <= burn_in < total_time, got {} and {}",
                self.burn_in, self.total_time
            )));
        }
        if self.batches < 2 {
            return Err(AsepError::InvalidConfig(format!(
                "need at least two batches, got {}",
                self.batches
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    /// Time-averaged occupation of sites `1..=N`.
    pub occupancy: Vec<f64>,
    /// Batch-means standard error of each occupation.
    pub occupancy_se: Vec<f64>,
    /// Fraction of time spent with `k` particles, `k = 0..=N`.
    pub count_histogram: Vec<f64>,
    /// Net particles entering at the left per unit time.
    pub inflow: f64,
    pub inflow_se: f64,
    /// Net particles leaving at the right per unit time.
    pub outflow: f64,
    pub outflow_se: f64,
    pub events: u64,
    pub rng: String,
}

/// Complete binary tree of nonnegative weights.
struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(len: usize) -> Self {
        let leaves = len.next_power_of_two();
        SumTree {
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    fn set(&mut self, slot: usize, value: f64) {
        let mut i = slot + self.leaves;
        self.nodes[i] = value;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Slot whose cumulative range contains `target` in `[0, total)`.
    fn find(&self, mut target: f64) -> usize {
        let mut i = 1;
        while i < self.leaves {
            let left = self.nodes[2 * i];
            if target < left {
                i *= 2;
            } else {
                target -= left;
                i = 2 * i + 1;
            }
        }
        // Rounding can land on an empty leaf; step back to a live one.
        let mut slot = i - self.leaves;
        while self.nodes[slot + self.leaves] == 0.0 && slot > 0 {
            slot -= 1;
        }
        slot
    }
}

struct Lattice {
    asep: AsepParams,
    sites: Vec<bool>,
    tree: SumTree,
}

impl Lattice {
    // Slots: 0..n-1 bonds (i, i+1), n-1 left boundary, n right boundary.
    fn new(asep: AsepParams, n: usize) -> Self {
        let mut lattice = Lattice {
            asep,
            sites: vec![false; n],
            tree: SumTree::new(n + 1),
        };
        for slot in 0..=n {
            lattice.refresh(slot);
        }
        lattice
    }

    fn n(&self) -> usize {
        self.sites.len()
    }

    fn rate(&self, slot: usize) -> f64 {
        let n = self.n();
        let p = &self.asep;
        if slot + 1 < n {
            match (self.sites[slot], self.sites[slot + 1]) {
                (true, false) => 1.0,
                (false, true) => p.q,
                _ => 0.0,
            }
        } else if slot + 1 == n {
            if self.sites[0] {
                p.gamma
            } else {
                p.alpha
            }
        } else if self.sites[n - 1] {
            p.beta
        } else {
            p.delta
        }
    }

    fn refresh(&mut self, slot: usize) {
        let r = self.rate(slot);
        self.tree.set(slot, r);
    }

    fn refresh_around(&mut self, site: usize) {
        let n = self.n();
        if site > 0 {
            self.refresh(site - 1);
        }
        if site + 1 < n {
            self.refresh(site);
        }
        if site == 0 {
            self.refresh(n - 1);
        }
        if site == n - 1 {
            self.refresh(n);
        }
    }
}

/// Time-weighted accumulators for one batch.
#[derive(Clone)]
struct Batch {
    occupied: Vec<f64>,
    count_time: Vec<f64>,
    inflow: f64,
    outflow: f64,
}

impl Batch {
    fn new(n: usize) -> Self {
        Batch {
            occupied: vec![0.0; n],
            count_time: vec![0.0; n + 1],
            inflow: 0.0,
            outflow: 0.0,
        }
    }
}

struct Recorder {
    boundaries: Vec<f64>,
    /// Index of the next boundary to cross; batch `k` spans boundaries
    /// `k` and `k + 1`.
    next: usize,
    last_site: Vec<f64>,
    last_count: f64,
    batches: Vec<Batch>,
}

impl Recorder {
    fn new(config: &SimConfig) -> Self {
        let width = (config.total_time - config.burn_in) / config.batches as f64;
        let boundaries = (0..=config.batches)
            .map(|k| {
                if k == config.batches {
                    config.total_time
                } else {
                    config.burn_in + k as f64 * width
                }
            })
            .collect();
        Recorder {
            boundaries,
            next: 0,
            last_site: vec![0.0; config.n],
            last_count: 0.0,
            batches: vec![Batch::new(config.n); config.batches],
        }
    }

    fn active(&self) -> Option<usize> {
        (self.next >= 1 && self.next < self.boundaries.len()).then(|| self.next - 1)
    }

    fn close_site(&mut self, j: usize, occupied: bool, now: f64) {
        if let Some(b) = self.active() {
            if occupied {
                self.batches[b].occupied[j] += now - self.last_site[j];
            }
        }
        self.last_site[j] = now;
    }

    fn close_count(&mut self, count: usize, now: f64) {
        if let Some(b) = self.active() {
            self.batches[b].count_time[count] += now - self.last_count;
        }
        self.last_count = now;
    }

    /// Flushes every accumulator at each boundary up to `now`.
    fn advance(&mut self, sites: &[bool], count: usize, now: f64) {
        while self.next < self.boundaries.len() && self.boundaries[self.next] <= now {
            let edge = self.boundaries[self.next];
            for (j, &occ) in sites.iter().enumerate() {
                self.close_site(j, occ, edge);
            }
            self.close_count(count, edge);
            self.next += 1;
        }
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Runs one replica; deterministic given the seed.
pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let n = config.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut lattice = Lattice::new(config.asep, n);
    let mut recorder = Recorder::new(config);
    let mut count = 0usize;
    let mut now = 0.0;
    let mut events = 0u64;
    loop {
        let total = lattice.tree.total();
        let next = if total > 0.0 {
            let u: f64 = rng.random();
            now - (1.0 - u).ln() / total
        } else {
            f64::INFINITY
        };
        recorder.advance(&lattice.sites, count, next.min(config.total_time));
        if next > config.total_time {
            break;
        }
        now = next;
        events += 1;
        let slot = lattice.tree.find(rng.random::<f64>() * total);
        let flip = |lattice: &mut Lattice, recorder: &mut Recorder, j: usize| {
            recorder.close_site(j, lattice.sites[j], now);
            lattice.sites[j] = !lattice.sites[j];
        };
        if slot + 1 < n {
            flip(&mut lattice, &mut recorder, slot);
            flip(&mut lattice, &mut recorder, slot + 1);
            lattice.refresh_around(slot);
            lattice.refresh_around(slot + 1);
        } else {
            let site = if slot + 1 == n { 0 } else { n - 1 };
            recorder.close_count(count, now);
            flip(&mut lattice, &mut recorder, site);
            let entered = lattice.sites[site];
            count = if entered { count + 1 } else { count - 1 };
            if let Some(b) = recorder.active() {
                let sign = if entered { 1.0 } else { -1.0 };
                if site == 0 && slot + 1 == n {
                    recorder.batches[b].inflow += sign;
                } else {
                    recorder.batches[b].outflow -= sign;
                }
            }
            lattice.refresh_around(site);
        }
    }

    let width = (config.total_time - config.burn_in) / config.batches as f64;
    let batches = &recorder.batches;
    let mut occupancy = Vec::with_capacity(n);
    let mut occupancy_se = Vec::with_capacity(n);
    for j in 0..n {
        let per: Vec<f64> = batches.iter().map(|b| b.occupied[j] / width).collect();
        let (m, se) = mean_and_se(&per);
        occupancy.push(m);
        occupancy_se.push(se);
    }
    let span = config.total_time - config.burn_in;
    let count_histogram = (0..=n)
        .map(|k| batches.iter().map(|b| b.count_time[k]).sum::<f64>() / span)
        .collect();
    let inflows: Vec<f64> = batches.iter().map(|b| b.inflow / width).collect();
    let outflows: Vec<f64> = batches.iter().map(|b| b.outflow / width).collect();
    let (inflow, inflow_se) = mean_and_se(&inflows);
    let (outflow, outflow_se) = mean_and_se(&outflows);
    Ok(SimResult {
        occupancy,
        occupancy_se,
        count_histogram,
        inflow,
        inflow_se,
        outflow,
        outflow_se,
        events,
        rng: RNG_ALGORITHM.to_string(),
    })
}

/// Independent replicas with the given seeds, run in parallel.
pub fn simulate_replicas(config: &SimConfig, seeds: &[u64]) -> Result<Vec<SimResult>> {
    seeds
        .par_iter()
        .map(|&seed| simulate(&SimConfig { seed, ..*config }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(asep: AsepParams, n: usize, total_time: f64, seed: u64) -> SimConfig {
        SimConfig {
            asep,
            n,
            total_time,
            burn_in: 100.0,
            seed,
            batches: 20,
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let asep = AsepParams::tasep(1.0, 1.0).unwrap();
        let mut c = config(asep, 2, 10.0, 1);
        c.burn_in = 20.0;
        assert!(simulate(&c).is_err());
        let mut c = config(asep, 2, 1000.0, 1);
        c.batches = 1;
        assert!(simulate(&c).is_err());
    }

    #[test]
    fn sum_tree_sampling() {
        let mut t = SumTree::new(5);
        for (i, w) in [1.0, 0.0, 2.0, 0.0, 1.0].iter().enumerate() {
            t.set(i, *w);
        }
        assert_eq!(t.total(), 4.0);
        assert_eq!(t.find(0.5), 0);
        assert_eq!(t.find(1.5), 2);
        assert_eq!(t.find(3.5), 4);
    }

    #[test]
    fn two_sites_match_exact_profile() {
        let asep = AsepParams::tasep(1.0, 1.0).unwrap();
        let r = simulate(&config(asep, 2, 20000.0, 11)).unwrap();
        for (occ, (se, exact)) in r
            .occupancy
            .iter()
            .zip(r.occupancy_se.iter().zip([0.6, 0.4]))
        {
            assert!((occ - exact).abs() < 3.0 * se, "{occ} vs {exact} (se {se})");
        }
        let mass: f64 = r.count_histogram.iter().sum();
        assert!((mass - 1.0).abs() < 1e-9);
        assert!(
            (r.inflow - r.outflow).abs()
                < 3.0 * (r.inflow_se.powi(2) + r.outflow_se.powi(2)).sqrt()
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let asep = AsepParams::new(0.7, 0.4, 0.1, 0.2, 0.3).unwrap();
        let a = simulate(&config(asep, 6, 500.0, 5)).unwrap();
        let b = simulate(&config(asep, 6, 500.0, 5)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&config(asep, 6, 500.0, 6)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn error_bars_shrink_with_time() {
        let asep = AsepParams::tasep(1.0, 1.0).unwrap();
        let se = |t: f64| {
            let runs =
                simulate_replicas(&config(asep, 4, t, 0), &[1, 2, 3, 4, 5, 6, 7, 8]).unwrap();
            runs.iter()
                .map(|r| r.occupancy_se.iter().sum::<f64>())
                .sum::<f64>()
        };
        let ratio = se(20000.0) / se(40000.0);
        assert!((1.2..=1.7).contains(&ratio), "ratio {ratio}");
    }
}
