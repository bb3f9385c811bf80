use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use asep_core::AsepParams;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "asep",
    version,
    about = "Stationary observables of the open-boundary ASEP"
)]
pub struct Cli {
    /// Where the main output goes; `-` is standard output.
    #[arg(long, global = true, default_value = "-")]
    pub out: String,
    /// Also write a JSON run manifest to this path.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// Boundary and bulk rates; the defaults give the totally asymmetric
/// chain with unit boundary rates.
#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct Rates {
    /// Left entry rate.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Right exit rate.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub beta: f64,
    /// Left exit rate.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Right entry rate.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub delta: f64,
    /// Left hop rate (right hops have rate one).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub q: f64,
}

impl Rates {
    pub fn asep(&self) -> asep_core::Result<AsepParams> {
        AsepParams::new(self.alpha, self.beta, self.gamma, self.delta, self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Method {
    Oracle,
    Ansatz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum LevelArg {
    Quick,
    Full,
}

/// `lo:hi:step`, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|k| self.lo + k as f64 * self.step)
            .collect()
    }
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(format!("expected lo:hi:step, got {s:?}"));
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    let grid = Grid {
        lo: num(lo)?,
        hi: num(hi)?,
        step: num(step)?,
    };
    if !(grid.step > 0.0 && grid.hi >= grid.lo && grid.lo.is_finite() && grid.hi.is_finite()) {
        return Err(format!("need lo <= hi and step > 0, got {s:?}"));
    }
    if (grid.hi - grid.lo) / grid.step > 1e6 {
        return Err(format!("grid {s:?} has more than a million points"));
    }
    Ok(grid)
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Askey-Wilson parameters, boundary densities, phase and current.
    Params(#[command(flatten)] Rates),
    /// Stationary law: every configuration (oracle) or profile and count
    /// law (ansatz).
    Stationary {
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Method::Oracle)]
        method: Method,
    },
    /// Mean occupation of each site.
    Profile {
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        n: usize,
    },
    /// Partition function by the matrix product and by quadrature.
    Partition {
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        n: usize,
    },
    /// Cumulant generating function or rate function of the density.
    #[command(group(ArgGroup::new("grid").required(true).args(["lambda", "rate"])))]
    Ldp {
        #[command(flatten)]
        rates: Rates,
        /// Grid of tilts `lo:hi:step`.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        lambda: Option<Grid>,
        /// Grid of densities `lo:hi:step`.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        rate: Option<Grid>,
        /// Add the exact finite-lattice column for this many sites.
        #[arg(long)]
        empirical_n: Option<usize>,
    },
    /// Generating function of the leftmost sites of the weighted
    /// semi-infinite limit.
    Semiinf {
        #[command(flatten)]
        rates: Rates,
        #[arg(long, allow_negative_numbers = true)]
        u: f64,
        #[arg(long)]
        k: usize,
        /// Comma-separated, each in (0, u]; defaults to `u j / K`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        times: Option<Vec<f64>>,
    },
    /// Event-driven simulation with batch-means error bars.
    Simulate {
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        n: usize,
        /// Total simulated time, burn-in included.
        #[arg(long)]
        time: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        burnin: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        batches: usize,
        /// Profile CSV path; defaults to `<out>.profile.csv` when `--out`
        /// is a file, and is skipped when writing to standard output.
        #[arg(long)]
        profile_out: Option<PathBuf>,
    },
    /// Run the acceptance suite and report on it.
    Validate {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Params(_) => "params",
            Command::Stationary { .. } => "stationary",
            Command::Profile { .. } => "profile",
            Command::Partition { .. } => "partition",
            Command::Ldp { .. } => "ldp",
            Command::Semiinf { .. } => "semiinf",
            Command::Simulate { .. } => "simulate",
            Command::Validate { .. } => "validate",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(
            parse_grid("0:1:0.25").unwrap().points(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert_eq!(parse_grid("-1:-1:1").unwrap().points(), vec![-1.0]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }
}
