use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod lists;

use config::RunConfig;

/// Mazur bounds, exact averages and fits for the central spin model.
#[derive(Parser, Debug)]
#[command(name = "csm", version, args_override_self = true)]
pub struct Cli {
    /// Flat `key = value` file supplying flags; explicit flags win.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Worker threads; 1 gives byte-stable output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// One bound, printed as a JSON record.
    Bound(commands::BoundArgs),
    /// Bounds over lists of N, x, h and sets, as CSV or JSON.
    Scan(commands::ScanArgs),
    /// Polynomial extrapolation in 1/N of an `N,value` file.
    Extrapolate(commands::ExtrapolateArgs),
    /// `A ln(x/B)/x` fit of an `x,S` file.
    FitLog(commands::FitLogArgs),
    /// Closed-form scalar products from the trace solver.
    SolveElements(commands::SolveElementsArgs),
    /// Re-derive the element table and check it against dense matrices.
    RegenerateAppendixC(commands::RegenerateArgs),
    /// Persisting correlation from full diagonalization.
    Ed(commands::EdArgs),
    /// Gaussian moments against Monte Carlo, and the leading-order bound.
    GaussianCheck(commands::GaussianArgs),
    /// Print a coupling set.
    Couplings(SystemArgs),
}

/// Couplings and field shared by most commands.
#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    /// Bath size for exponential couplings `J_k = exp(-k x / N)`.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Spread of the exponential couplings.
    #[arg(long)]
    pub x: Option<f64>,
    /// Explicit couplings, comma separated; integers and fractions stay exact.
    #[arg(long = "J")]
    pub j: Option<String>,
    /// Coupling file as written by `csm couplings`.
    #[arg(long)]
    pub couplings: Option<String>,
    /// `sigma2` rescales exponential couplings to unit second moment; `raw` keeps J = 1 first.
    #[arg(long, default_value = "sigma2")]
    pub normalization: String,
    /// Magnetic field on the central spin.
    #[arg(long, default_value_t = 0.0)]
    pub h: f64,
}

/// Index of the subcommand token, skipping global flags and their values.
fn subcommand_position(argv: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].as_str();
        if a == "--config" || a == "--threads" {
            i += 2;
        } else if a.starts_with("--config=") || a.starts_with("--threads=") {
            i += 1;
        } else if a.starts_with('-') {
            return None;
        } else {
            return Some(i);
        }
    }
    None
}

fn config_path(argv: &[String]) -> Option<String> {
    argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    })
}

/// Splices the config file's flags in right after the subcommand.
fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&argv) else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let cfg = RunConfig::parse(&text).with_context(|| format!("in config {path}"))?;
    match subcommand_position(&argv) {
        Some(pos) => {
            let extra = cfg.to_args(&argv[pos])?;
            let mut out = argv[..=pos].to_vec();
            out.extend(extra);
            out.extend_from_slice(&argv[pos + 1..]);
            Ok(out)
        }
        None => {
            let cmd = cfg.command().context("config has no 'command' and none was given")?.to_string();
            let mut out = vec![argv[0].clone(), cmd.clone()];
            out.extend(cfg.to_args(&cmd)?);
            out.extend_from_slice(&argv[1..]);
            Ok(out)
        }
    }
}

fn run() -> Result<u8> {
    let argv = expand_config(std::env::args().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return Ok(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("thread pool")?;
    }
    let Some(command) = cli.command else {
        anyhow::bail!("no command given; see --help");
    };
    match command {
        Command::Bound(a) => commands::bound(&a),
        Command::Scan(a) => commands::scan(&a),
        Command::Extrapolate(a) => commands::extrapolate(&a),
        Command::FitLog(a) => commands::fit_log(&a),
        Command::SolveElements(a) => commands::solve_elements(&a),
        Command::RegenerateAppendixC(a) => commands::regenerate(&a),
        Command::Ed(a) => commands::ed(&a),
        Command::GaussianCheck(a) => commands::gaussian_check(&a),
        Command::Couplings(a) => commands::couplings(&a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
