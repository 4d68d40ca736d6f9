//! Command-line front end. Every number printed here comes from the library.
//!
//! Exit codes: 0 success, 2 invalid input, 3 verification failure.

mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

pub use commands::{cmd_benchmark, cmd_region_map, cmd_simulate, cmd_solve, cmd_sweep, cmd_verify};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    S,
    Mu,
    Xi,
}

#[derive(Debug, Parser)]
#[command(name = "robustsell", version, about = "Robust selling strategies against an unknown outside option")]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Default, Clone, Args)]
struct CommonArgs {
    /// Prior probability of a high match value.
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Mean of the outside option.
    #[arg(long, global = true)]
    xi: Option<f64>,
    /// Search cost.
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Oracle grid size (solve, verify) or map resolution (region-map).
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,
    /// Tolerance for certification.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Flat JSON file of defaults; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Robust strategy for one parameter triple.
    Solve {
        /// Also certify with the grid oracle and the saddle check.
        #[arg(long)]
        certify: bool,
    },
    /// Region and policy over a (xi, s) grid at fixed mu.
    RegionMap,
    /// Price, policy and guarantee along one parameter.
    Sweep {
        #[arg(long, value_enum)]
        var: Option<SweepVar>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Saddle and oracle certification over a parameter grid.
    Verify {
        /// Move the top atom of deterrence policies down by 0.01.
        #[arg(long)]
        tamper: bool,
    },
    /// Monte Carlo check of the demand formula.
    Simulate {
        #[arg(long)]
        price: Option<f64>,
        /// JSON posterior distribution (default: the robust policy).
        #[arg(long)]
        h: Option<PathBuf>,
        /// JSON outside-option distribution (default: two points at 0 and 1).
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Zero-search and known-distribution benchmarks.
    Benchmark {
        /// uniform, exp:RATE, triangular:MODE or beta:A,B
        #[arg(long)]
        dist: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    RegionMap,
    Sweep,
    Verify,
    Simulate,
    Benchmark,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ConfigFile {
    mu: Option<f64>,
    xi: Option<f64>,
    s: Option<f64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    seed: Option<u64>,
    #[serde(alias = "grid_n")]
    grid_n: Option<usize>,
    tol: Option<f64>,
    certify: Option<bool>,
    var: Option<SweepVar>,
    n: Option<usize>,
    tamper: Option<bool>,
    price: Option<f64>,
    h: Option<PathBuf>,
    g: Option<PathBuf>,
    trials: Option<u64>,
    dist: Option<String>,
}

/// Resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub mu: Option<f64>,
    pub xi: Option<f64>,
    pub s: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: u64,
    pub grid_n: Option<usize>,
    pub tol: Option<f64>,
    pub certify: bool,
    pub var: Option<SweepVar>,
    pub n: Option<usize>,
    pub tamper: bool,
    pub price: Option<f64>,
    pub h: Option<PathBuf>,
    pub g: Option<PathBuf>,
    pub trials: Option<u64>,
    pub dist: Option<String>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            mu: None,
            xi: None,
            s: None,
            out: None,
            format: None,
            seed: 0,
            grid_n: None,
            tol: None,
            certify: false,
            var: None,
            n: None,
            tamper: false,
            price: None,
            h: None,
            g: None,
            trials: None,
            dist: None,
        }
    }
}

fn resolve(cli: Cli) -> Result<RunConfig, String> {
    let file = match &cli.common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str::<ConfigFile>(&text).map_err(|e| format!("bad config {}: {e}", path.display()))?
        }
        None => ConfigFile::default(),
    };
    let c = cli.common;
    let (command, certify, var, n, tamper, price, h, g, trials, dist) = match cli.command {
        CommandArgs::Solve { certify } => (Command::Solve, certify, None, None, false, None, None, None, None, None),
        CommandArgs::RegionMap => (Command::RegionMap, false, None, None, false, None, None, None, None, None),
        CommandArgs::Sweep { var, n } => (Command::Sweep, false, var, n, false, None, None, None, None, None),
        CommandArgs::Verify { tamper } => (Command::Verify, false, None, None, tamper, None, None, None, None, None),
        CommandArgs::Simulate { price, h, g, trials } => {
            (Command::Simulate, false, None, None, false, price, h, g, trials, None)
        }
        CommandArgs::Benchmark { dist } => (Command::Benchmark, false, None, None, false, None, None, None, None, dist),
    };
    Ok(RunConfig {
        command,
        mu: c.mu.or(file.mu),
        xi: c.xi.or(file.xi),
        s: c.s.or(file.s),
        out: c.out.or(file.out),
        format: c.format.or(file.format),
        seed: c.seed.or(file.seed).unwrap_or(0),
        grid_n: c.grid_n.or(file.grid_n),
        tol: c.tol.or(file.tol),
        certify: certify || file.certify.unwrap_or(false),
        var: var.or(file.var),
        n: n.or(file.n),
        tamper: tamper || file.tamper.unwrap_or(false),
        price: price.or(file.price),
        h: h.or(file.h),
        g: g.or(file.g),
        trials: trials.or(file.trials),
        dist: dist.or(file.dist),
    })
}

/// Dispatches a configured command.
pub fn execute(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cfg.command {
        Command::Solve => cmd_solve(cfg, out, err),
        Command::RegionMap => cmd_region_map(cfg, out, err),
        Command::Sweep => cmd_sweep(cfg, out, err),
        Command::Verify => cmd_verify(cfg, out, err),
        Command::Simulate => cmd_simulate(cfg, out, err),
        Command::Benchmark => cmd_benchmark(cfg, out, err),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match resolve(cli) {
        Ok(cfg) => execute(&cfg, out, err),
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INVALID
        }
    }
}

/// Formats with 9 significant digits, without trailing zeros.
pub fn fmt9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{x:.8e}");
    }
    let s = format!("{:.*}", (8 - exp).max(0) as usize, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
