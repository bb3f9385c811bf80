use std::path::{Path, PathBuf};

use serde_json::json;

use asep_core::ansatz::{count_gf_poly, partition, partition_moment, profile_exact};
use asep_core::ldp::{empirical_lambda, lambda_closed, ldp_window, rate_i};
use asep_core::params::{derive_aw, phase_of};
use asep_core::semiinf::{bernoulli_density, current, mu_gf_unordered, tilde_params, zeta};
use asep_core::sim::{simulate, SimConfig};
use asep_core::validate::{self, Level};
use asep_core::{oracle, AsepError};

use crate::args::{Command, Grid, LevelArg, Method, Rates};
use crate::error::CliError;
use crate::output::{versioned, Cell, Product, Table};

/// Everything a command produced.
pub struct Run {
    /// Products with their destinations (`-` for standard output).
    pub products: Vec<(Product, String)>,
    pub seeds: Vec<u64>,
    /// False when `validate` found a failing criterion.
    pub passed: bool,
}

impl Run {
    fn single(product: Product, out: &str) -> Self {
        Run {
            products: vec![(product, out.to_string())],
            seeds: Vec::new(),
            passed: true,
        }
    }
}

pub fn execute(command: &Command, out: &str) -> Result<Run, CliError> {
    match command {
        Command::Params(rates) => Ok(Run::single(Product::Json(params_json(rates)?), out)),
        Command::Stationary { rates, n, method } => Ok(Run::single(
            Product::Csv(stationary_table(rates, *n, *method)?),
            out,
        )),
        Command::Profile { rates, n } => {
            Ok(Run::single(Product::Csv(profile_table(rates, *n)?), out))
        }
        Command::Partition { rates, n } => {
            Ok(Run::single(Product::Json(partition_json(rates, *n)?), out))
        }
        Command::Ldp {
            rates,
            lambda,
            rate,
            empirical_n,
        } => {
            let table = match (lambda, rate) {
                (Some(g), None) => lambda_table(rates, g, *empirical_n)?,
                (None, Some(g)) => rate_table(rates, g, *empirical_n)?,
                _ => {
                    return Err(CliError::Usage(
                        "give exactly one of --lambda and --rate".into(),
                    ))
                }
            };
            Ok(Run::single(Product::Csv(table), out))
        }
        Command::Semiinf { rates, u, k, times } => Ok(Run::single(
            Product::Json(semiinf_json(rates, *u, *k, times.as_deref())?),
            out,
        )),
        Command::Simulate {
            rates,
            n,
            time,
            burnin,
            seed,
            batches,
            profile_out,
        } => {
            let config = SimConfig {
                asep: rates.asep()?,
                n: *n,
                total_time: *time,
                burn_in: *burnin,
                seed: *seed,
                batches: *batches,
            };
            let (json, table) = simulate_outputs(&config)?;
            let mut products = vec![(Product::Json(json), out.to_string())];
            if let Some(path) = profile_target(out, profile_out.as_deref()) {
                products.push((Product::Csv(table), path));
            }
            Ok(Run {
                products,
                seeds: vec![*seed],
                passed: true,
            })
        }
        Command::Validate { level } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let report = validate::run_all(level);
            for line in validate::summary_lines(&report) {
                eprintln!("{line}");
            }
            let schema = schema_checks();
            for (name, ok, detail) in &schema {
                eprintln!(
                    "schema {} {name}: {detail}",
                    if *ok { "ok  " } else { "FAIL" }
                );
            }
            let schema_ok = schema.iter().all(|(_, ok, _)| *ok);
            let passed = report.passed && schema_ok;
            let json = versioned(json!({
                "passed": passed,
                "suite": report,
                "schema": schema
                    .iter()
                    .map(|(name, ok, detail)| json!({"name": name, "passed": ok, "detail": detail}))
                    .collect::<Vec<_>>(),
            }));
            Ok(Run {
                products: vec![(Product::Json(json), out.to_string())],
                seeds: vec![validate::SUITE_SEED],
                passed,
            })
        }
    }
}

fn profile_target(out: &str, explicit: Option<&Path>) -> Option<String> {
    match explicit {
        Some(p) => Some(p.to_string_lossy().into_owned()),
        None if out == "-" => None,
        None => {
            let mut p = PathBuf::from(out);
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "simulate".into());
            p.set_file_name(format!("{stem}.profile.csv"));
            Some(p.to_string_lossy().into_owned())
        }
    }
}

pub fn params_json(rates: &Rates) -> Result<serde_json::Value, CliError> {
    let aw = derive_aw(&rates.asep()?)?;
    let info = phase_of(&aw)?;
    Ok(versioned(json!({
        "A": aw.a,
        "B": aw.b,
        "C": aw.c,
        "D": aw.d,
        "rho0": info.rho0,
        "rho1": info.rho1,
        "phase": info.phase.name(),
        "J": current(&aw)?,
    })))
}

pub fn stationary_table(rates: &Rates, n: usize, method: Method) -> Result<Table, CliError> {
    let asep = rates.asep()?;
    match method {
        Method::Oracle => {
            let table = oracle::solve(&asep, n)?;
            let mut rows: Vec<(String, f64)> = table
                .probs
                .iter()
                .enumerate()
                .map(|(config, &p)| (oracle::config_string(config, n), p))
                .collect();
            rows.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Table::new(vec!["configuration", "probability"]);
            for (config, p) in rows {
                out.push(vec![Cell::Text(config), Cell::Num(p)]);
            }
            Ok(out)
        }
        Method::Ansatz => {
            derive_aw(&asep)?.check_fan()?;
            let profile = profile_exact(&asep, n)?;
            let counts = count_gf_poly(&asep, n)?.distribution();
            let mut out = Table::new(vec!["quantity", "index", "value"]);
            for (j, v) in profile.iter().enumerate() {
                out.push(vec![
                    Cell::Text("occupancy".into()),
                    Cell::Int(j as u64 + 1),
                    Cell::Num(*v),
                ]);
            }
            for (k, v) in counts.iter().enumerate() {
                out.push(vec![
                    Cell::Text("count".into()),
                    Cell::Int(k as u64),
                    Cell::Num(*v),
                ]);
            }
            Ok(out)
        }
    }
}

pub fn profile_table(rates: &Rates, n: usize) -> Result<Table, CliError> {
    let asep = rates.asep()?;
    derive_aw(&asep)?.check_fan()?;
    let mut out = Table::new(vec!["site", "occupancy"]);
    for (j, v) in profile_exact(&asep, n)?.iter().enumerate() {
        out.push(vec![Cell::Int(j as u64 + 1), Cell::Num(*v)]);
    }
    Ok(out)
}

pub fn partition_json(rates: &Rates, n: usize) -> Result<serde_json::Value, CliError> {
    let asep = rates.asep()?;
    derive_aw(&asep)?.check_fan()?;
    let ansatz = partition(&asep, n)?;
    let quadrature = partition_moment(&asep, n)?;
    Ok(versioned(json!({
        "n": n,
        "K_N": ansatz,
        "route_ansatz": ansatz,
        "route_quadrature": quadrature,
        "relative_gap": (ansatz - quadrature).abs() / ansatz.abs(),
    })))
}

fn check_lattice(n: Option<usize>) -> Result<Option<usize>, CliError> {
    match n {
        Some(0) => Err(CliError::Usage("--empirical-n must be positive".into())),
        other => Ok(other),
    }
}

pub fn lambda_table(
    rates: &Rates,
    grid: &Grid,
    empirical_n: Option<usize>,
) -> Result<Table, CliError> {
    let asep = rates.asep()?;
    let aw = derive_aw(&asep)?;
    let empirical_n = check_lattice(empirical_n)?;
    let mut header = vec!["lambda", "Lambda"];
    if empirical_n.is_some() {
        header.push("empirical");
    }
    let mut out = Table::new(header);
    for lambda in grid.points() {
        let mut row = vec![Cell::Num(lambda), Cell::Num(lambda_closed(lambda, &aw)?)];
        if let Some(n) = empirical_n {
            row.push(Cell::Num(empirical_lambda(&asep, n, lambda)?));
        }
        out.push(row);
    }
    Ok(out)
}

/// The empirical column is `-(1/N) log P(|density - x| < step/2)`.
pub fn rate_table(
    rates: &Rates,
    grid: &Grid,
    empirical_n: Option<usize>,
) -> Result<Table, CliError> {
    let asep = rates.asep()?;
    let aw = derive_aw(&asep)?;
    let empirical_n = check_lattice(empirical_n)?;
    let mut header = vec!["x", "I"];
    if empirical_n.is_some() {
        header.push("empirical");
    }
    let mut out = Table::new(header);
    for x in grid.points() {
        let mut row = vec![Cell::Num(x), Cell::Num(rate_i(x, &aw)?)];
        if let Some(n) = empirical_n {
            let half = 0.5 * grid.step;
            row.push(Cell::Num(-ldp_window(&asep, n, x - half, x + half)?));
        }
        out.push(row);
    }
    Ok(out)
}

pub fn semiinf_json(
    rates: &Rates,
    u: f64,
    k: usize,
    times: Option<&[f64]>,
) -> Result<serde_json::Value, CliError> {
    let aw = derive_aw(&rates.asep()?)?;
    if k == 0 {
        return Err(CliError::Usage("--k must be positive".into()));
    }
    let ts: Vec<f64> = match times {
        Some(ts) if ts.len() != k => {
            return Err(AsepError::LengthMismatch {
                expected: k,
                got: ts.len(),
            }
            .into())
        }
        Some(ts) => ts.to_vec(),
        None => (1..=k).map(|j| u * j as f64 / k as f64).collect(),
    };
    let tilde = tilde_params(&aw, u)?;
    Ok(versioned(json!({
        "u": u,
        "k": k,
        "times": ts,
        "mu_gf": mu_gf_unordered(&aw, u, &ts)?,
        "deterministic": tilde.deterministic,
        "site_density": bernoulli_density(&aw, u)?,
        "zeta": zeta(&aw, u)?,
    })))
}

pub fn simulate_outputs(config: &SimConfig) -> Result<(serde_json::Value, Table), CliError> {
    let result = simulate(config)?;
    let mut table = Table::new(vec!["site", "occupancy", "standard_error"]);
    for (j, (m, se)) in result
        .occupancy
        .iter()
        .zip(&result.occupancy_se)
        .enumerate()
    {
        table.push(vec![Cell::Int(j as u64 + 1), Cell::Num(*m), Cell::Num(*se)]);
    }
    let json = versioned(json!({
        "config": config,
        "result": result,
    }));
    Ok((json, table))
}

/// Expected JSON keys and CSV headers of version 1, checked against what
/// the commands actually emit.
fn schema_checks() -> Vec<(String, bool, String)> {
    let rates = Rates {
        alpha: 1.0,
        beta: 1.0,
        gamma: 0.0,
        delta: 0.0,
        q: 0.0,
    };
    let keys = |v: Result<serde_json::Value, CliError>| -> Result<Vec<String>, String> {
        let v = v.map_err(|e| e.to_string())?;
        let mut k: Vec<String> = v
            .as_object()
            .map(|o| o.keys().cloned().collect())
            .unwrap_or_default();
        k.sort();
        Ok(k)
    };
    let header = |t: Result<Table, CliError>| -> Result<Vec<String>, String> {
        t.map(|t| t.header.iter().map(|s| s.to_string()).collect())
            .map_err(|e| e.to_string())
    };
    let sorted = |mut v: Vec<&str>| {
        v.sort();
        v.into_iter().map(String::from).collect::<Vec<_>>()
    };
    let sim = SimConfig {
        asep: rates.asep().expect("valid"),
        n: 2,
        total_time: 10.0,
        burn_in: 0.0,
        seed: 1,
        batches: 2,
    };
    type Case = (&'static str, Result<Vec<String>, String>, Vec<String>);
    let cases: Vec<Case> = vec![
        (
            "params json",
            keys(params_json(&rates)),
            sorted(vec![
                "A",
                "B",
                "C",
                "D",
                "J",
                "phase",
                "rho0",
                "rho1",
                "schema_version",
            ]),
        ),
        (
            "partition json",
            keys(partition_json(&rates, 3)),
            sorted(vec![
                "K_N",
                "n",
                "relative_gap",
                "route_ansatz",
                "route_quadrature",
                "schema_version",
            ]),
        ),
        (
            "semiinf json",
            keys(semiinf_json(&rates, 1.0, 2, None)),
            sorted(vec![
                "deterministic",
                "k",
                "mu_gf",
                "schema_version",
                "site_density",
                "times",
                "u",
                "zeta",
            ]),
        ),
        (
            "simulate json",
            keys(simulate_outputs(&sim).map(|(j, _)| j)),
            sorted(vec!["config", "result", "schema_version"]),
        ),
        (
            "simulate csv",
            header(simulate_outputs(&sim).map(|(_, t)| t)),
            vec!["site".into(), "occupancy".into(), "standard_error".into()],
        ),
        (
            "stationary oracle csv",
            header(stationary_table(&rates, 2, Method::Oracle)),
            vec!["configuration".into(), "probability".into()],
        ),
        (
            "stationary ansatz csv",
            header(stationary_table(&rates, 2, Method::Ansatz)),
            vec!["quantity".into(), "index".into(), "value".into()],
        ),
        (
            "profile csv",
            header(profile_table(&rates, 2)),
            vec!["site".into(), "occupancy".into()],
        ),
    ];
    cases
        .into_iter()
        .map(|(name, got, want)| match got {
            Ok(g) if g == want => (name.to_string(), true, format!("{g:?}")),
            Ok(g) => (
                name.to_string(),
                false,
                format!("got {g:?}, expected {want:?}"),
            ),
            Err(e) => (name.to_string(), false, e),
        })
        .collect()
}
