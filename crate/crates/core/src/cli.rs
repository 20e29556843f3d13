//! Command-line front end: `solve`, `sweep` and `verify`.
//!
//! Exit codes: 0 success, 1 configuration or file-format problem, 2 solver
//! failure, 3 verification failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convergence::{geometric_ladder, sweep, SlopeFit, SweepError, SweepReport, SweepRow};
use crate::model::{ProblemConfig, ProblemSpec, Regime, SolutionTriple, Switch};
use crate::solver::solve;
use crate::verifier::{verify_regular, VerificationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Environment variable capping the sweep worker count.
pub const THREADS_ENV: &str = "MFG1D_THREADS";

#[derive(Debug, Parser)]
#[command(name = "mfg1d", version, about = "Stationary 1D mean-field game solver and convergence harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write the verified solution as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve along a geometric ε ladder and fit convergence rates.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// CSV output; summary, plot data and metadata go next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.125)]
        eps_max: f64,
        #[arg(long, default_value_t = 10)]
        eps_count: usize,
    },
    /// Re-verify a solution file against a config.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Optional path for the verification report JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("verification failed: {}", .0.join(", "))]
    Verification(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Verification(_) => EXIT_VERIFY,
        }
    }
}

/// Runs a parsed command and returns its exit code, printing any error.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Solve { config, out } => cmd_solve(&config, &out),
        Command::Sweep { config, out, eps_max, eps_count } => cmd_sweep(&config, eps_max, eps_count, &out),
        Command::Verify { config, solution, out } => cmd_verify(&solution, &config, out.as_deref()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_spec(path: &Path) -> Result<ProblemSpec, CliError> {
    ProblemConfig::from_file(path)
        .and_then(|c| c.to_spec())
        .map_err(|e| CliError::Config(e.to_string()))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// The on-disk form of a solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub regime: Regime,
    pub h_bar: f64,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_switch: Option<f64>,
    /// `[m(d⁻), m(d⁺)]` at the switch point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_limits: Option<[f64; 2]>,
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub m: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
}

impl SolutionFile {
    pub fn new(spec: &ProblemSpec, sol: &SolutionTriple, report: Option<VerificationReport>) -> Self {
        Self {
            regime: sol.regime,
            h_bar: sol.h_bar,
            p: sol.p,
            d_switch: sol.switch.map(|s| s.d),
            switch_limits: sol.switch.map(|s| [s.m_left, s.m_right]),
            grid: spec.grid(),
            u: sol.u.clone(),
            m: sol.m.clone(),
            verification: report,
        }
    }

    /// Rebuilds the triple, checking the grid against `spec`.
    pub fn to_triple(&self, spec: &ProblemSpec) -> Result<SolutionTriple, CliError> {
        let n = spec.n_grid;
        if self.m.len() != n || self.u.len() != n || self.grid.len() != n {
            return Err(CliError::Config(format!(
                "solution grid has {} nodes (u: {}, m: {}), config expects {n}",
                self.grid.len(),
                self.u.len(),
                self.m.len()
            )));
        }
        if self.grid.iter().zip(spec.grid()).any(|(a, b)| (a - b).abs() > 1e-15) {
            return Err(CliError::Config("solution grid is not the uniform grid of the config".into()));
        }
        let switch = match (self.d_switch, self.switch_limits) {
            (None, None) => None,
            (Some(d), Some([l, r])) => Some(Switch { d, m_left: l, m_right: r }),
            _ => return Err(CliError::Config("d_switch and switch_limits must appear together".into())),
        };
        Ok(SolutionTriple {
            u: self.u.clone(),
            m: self.m.clone(),
            h_bar: self.h_bar,
            p: self.p,
            regime: self.regime,
            switch,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution serializes");
        s.push('\n');
        s
    }
}

pub fn cmd_solve(config: &Path, out: &Path) -> Result<(), CliError> {
    let spec = load_spec(config)?;
    let sol = solve(&spec).map_err(|e| CliError::Solver(e.to_string()))?;
    let report = verify_regular(&spec, &sol).map_err(|e| CliError::Solver(e.to_string()))?;
    let failing = report.failing.clone();
    write(out, &SolutionFile::new(&spec, &sol, Some(report)).to_json())?;
    if failing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failing))
    }
}

pub fn cmd_verify(solution: &Path, config: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let spec = load_spec(config)?;
    let text = fs::read_to_string(solution)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", solution.display())))?;
    let file: SolutionFile =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("solution schema: {e}")))?;
    let sol = file.to_triple(&spec)?;
    let report = verify_regular(&spec, &sol).map_err(|e| CliError::Config(e.to_string()))?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match out {
        Some(p) => write(p, &(json + "\n"))?,
        None => println!("{json}"),
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Verification(report.failing))
    }
}

/// Paths written by a sweep with CSV output `out`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutputs {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
    pub meta: PathBuf,
}

impl SweepOutputs {
    pub fn for_csv(out: &Path) -> Self {
        let stem = out.with_extension("");
        let with = |suffix: &str| {
            let mut s = stem.clone().into_os_string();
            s.push(suffix);
            PathBuf::from(s)
        };
        Self {
            csv: out.to_path_buf(),
            summary: with(".summary.json"),
            plot: with(".plot.dat"),
            meta: with(".meta.json"),
        }
    }
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

pub fn cmd_sweep(config: &Path, eps_max: f64, eps_count: usize, out: &Path) -> Result<(), CliError> {
    let spec = load_spec(config)?;
    if eps_count < 3 {
        return Err(CliError::Config(format!("ladder too short for fit: {eps_count} rungs, need at least 3")));
    }
    if !(eps_max > 0.0 && eps_max.is_finite()) {
        return Err(CliError::Config(format!("--eps-max must be positive, got {eps_max}")));
    }
    let ladder = geometric_ladder(eps_max, eps_count);
    let threads = thread_cap();
    let started = Instant::now();
    let run = || sweep(&spec, &ladder);
    let result = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("{THREADS_ENV}: {e}")))?
            .install(run),
        None => run(),
    };
    let report = result.map_err(|e| match e {
        SweepError::LadderTooShort(_) | SweepError::BadLadder | SweepError::Model(_) => CliError::Config(e.to_string()),
        other => CliError::Solver(other.to_string()),
    })?;
    let elapsed = started.elapsed().as_secs_f64();

    let paths = SweepOutputs::for_csv(out);
    write(&paths.csv, &sweep_csv(&report))?;
    write(&paths.summary, &sweep_summary(&report))?;
    write(&paths.plot, &sweep_plot_data(&report))?;
    let meta = serde_json::json!({
        "tool": "mfg1d",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config.display().to_string(),
        "threads": threads.unwrap_or_else(rayon::current_num_threads),
        "elapsed_seconds": elapsed,
    });
    write(&paths.meta, &(serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n"))?;

    for row in report.rows.iter().filter(|r| r.error.is_some()) {
        log::warn!("epsilon {}: {}", row.epsilon, row.error.as_deref().unwrap_or(""));
    }
    let unverified: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.error.is_none() && !r.verified)
        .map(|r| format!("epsilon {}", r.epsilon))
        .collect();
    if unverified.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(unverified))
    }
}

pub const CSV_HEADER: &str = "epsilon,h_bar,err_H,err_m,err_u,res_hj,res_transport,d_switch,bound_margin_H,bound_margin_m,bound_margin_u";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sweep_csv(report: &SweepReport) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in &report.rows {
        let fields = [
            num(r.epsilon),
            num(r.h_bar),
            num(r.err_h),
            num(r.err_m),
            num(r.err_u),
            num(r.res_hj),
            num(r.res_transport),
            r.d_switch.map(num).unwrap_or_default(),
            num(r.bound_margin_h),
            num(r.bound_margin_m),
            num(r.bound_margin_u),
        ];
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct Summary<'a> {
    regime: Regime,
    n_grid: usize,
    h_bar_limit: f64,
    prediction: &'a crate::convergence::RatePrediction,
    slope_h: SlopeFit,
    slope_m: SlopeFit,
    slope_u: SlopeFit,
    fit_rows: usize,
    all_verified: bool,
    failed_rows: Vec<FailedRow<'a>>,
}

#[derive(Serialize)]
struct FailedRow<'a> {
    epsilon: f64,
    error: &'a str,
}

pub fn sweep_summary(report: &SweepReport) -> String {
    let summary = Summary {
        regime: report.prediction.regime,
        n_grid: report.n_grid,
        h_bar_limit: report.h_bar_limit,
        prediction: &report.prediction,
        slope_h: report.slope_h,
        slope_m: report.slope_m,
        slope_u: report.slope_u,
        fit_rows: report.fit_rows,
        all_verified: report.rows.iter().all(|r| r.verified),
        failed_rows: report
            .rows
            .iter()
            .filter_map(|r| r.error.as_deref().map(|error| FailedRow { epsilon: r.epsilon, error }))
            .collect(),
    };
    serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"
}

/// One block per error kind, `log10 ε  log10 err`, blocks separated by two
/// blank lines. Zero errors have no logarithm and are left out.
pub fn sweep_plot_data(report: &SweepReport) -> String {
    let kinds: [(&str, fn(&SweepRow) -> f64); 3] =
        [("err_H", |r| r.err_h), ("err_m", |r| r.err_m), ("err_u", |r| r.err_u)];
    let mut s = String::new();
    for (i, (name, pick)) in kinds.iter().enumerate() {
        if i > 0 {
            s.push_str("\n\n");
        }
        let _ = writeln!(s, "# {name}: log10(epsilon) log10({name})");
        for r in report.rows.iter().filter(|r| r.error.is_none()) {
            let e = pick(r);
            if e > 0.0 {
                let _ = writeln!(s, "{} {}", num(r.epsilon.log10()), num(e.log10()));
            }
        }
    }
    s
}
