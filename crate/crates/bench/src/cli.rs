//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use semibandit::environment::Regime;
use semibandit::record::RunRecord;
use semibandit::{ProblemConfig, RegularizerKind};

use crate::bench_proj::{bench_projection, BenchArgs};
use crate::csvio::{read_header, read_rows, write_rows};
use crate::error::{BenchError, Result};
use crate::regret::{regret_experiment, Algo, RegretArgs};
use crate::summary::{summarize, SummaryRow};

#[derive(Debug, Parser)]
#[command(name = "semibandit", version, about = "Projection benchmarks and regret experiments for m-set semi-bandits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time bisection, Newton and reference projections on random losses.
    BenchProj(BenchProjCmd),
    /// Run regret experiments over seeds and write per-round records.
    Regret(RegretCmd),
    /// Checkpoint medians of R(T), R(T)/√T and R(T)/ln T from a regret CSV.
    Summarize(SummarizeCmd),
}

#[derive(Debug, Args)]
pub struct BenchProjCmd {
    /// Arm counts, comma separated.
    #[arg(long = "K", value_delimiter = ',', default_value = "10,20,30,40,50,60,70,80,90,100")]
    pub arms: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    /// Iterations per (regularizer, K) cell.
    #[arg(long = "N", default_value_t = 25)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub eps: f64,
    /// Step size multiplying the loss vector.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, value_delimiter = ',', default_value = "tsallis,shannon")]
    pub regularizer: Vec<RegularizerKind>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV, `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RegretCmd {
    #[arg(long, default_value = "ftrl")]
    pub algo: Algo,
    /// Potential for OSMD.
    #[arg(long, default_value = "tsallis")]
    pub regularizer: RegularizerKind,
    #[arg(long = "K")]
    pub arms: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long = "T")]
    pub horizon: Option<usize>,
    #[arg(long, default_value = "stoch")]
    pub regime: Regime,
    /// Corruption budgets; several values run one experiment each.
    #[arg(long = "C", value_delimiter = ',', default_value = "0")]
    pub corruption: Vec<f64>,
    /// Number of seeds.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Problem configuration in TOML; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SummarizeCmd {
    /// Regret CSV, or a summary CSV to re-emit.
    pub input: PathBuf,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

impl RegretCmd {
    pub fn experiments(&self) -> Result<Vec<RegretArgs>> {
        let base = RegretArgs::default();
        let cfg = self.config.as_deref().map(ProblemConfig::from_file).transpose()?;
        let first_seed = cfg.as_ref().map_or(0, |c| c.seed);
        let arms = self.arms.or(cfg.as_ref().map(|c| c.arms)).unwrap_or(base.arms);
        let args = RegretArgs {
            algo: self.algo,
            regularizer: self.regularizer,
            arms,
            m: self.m.or(cfg.as_ref().map(|c| c.m)).unwrap_or(base.m),
            dim: self.d.or(cfg.as_ref().map(|c| c.dim)).unwrap_or(base.dim),
            horizon: self.horizon.or(cfg.as_ref().map(|c| c.horizon)).unwrap_or(base.horizon),
            regime: self.regime,
            corruption: 0.0,
            seeds: (first_seed..first_seed + self.seeds).collect(),
            eps: self.eps.or(cfg.as_ref().map(|c| c.eps_proj)).unwrap_or(base.eps),
            exact_m: cfg.as_ref().is_none_or(|c| c.exact_m),
            lambda_min: cfg.as_ref().map(|c| c.lambda_min),
        };
        if self.regime != Regime::Corrupted && self.corruption.iter().any(|&c| c != 0.0) {
            warn!("corruption budget ignored outside the corrupted regime");
        }
        Ok(self.corruption.iter().map(|&c| RegretArgs { corruption: c, ..args.clone() }).collect())
    }
}

fn run_regret(cmd: &RegretCmd) -> Result<()> {
    let mut records: Vec<RunRecord> = Vec::new();
    let (mut failed, mut total) = (0, 0);
    for args in cmd.experiments()? {
        info!("running {} over {} seeds", args.group(), args.seeds.len());
        let exp = regret_experiment(&args);
        total += args.seeds.len();
        failed += exp.failures.len();
        records.extend(exp.records);
    }
    write_rows(&cmd.out, &records)?;
    if failed > 0 {
        return Err(BenchError::RunFailures { failed, total });
    }
    Ok(())
}

fn run_summarize(cmd: &SummarizeCmd) -> Result<()> {
    let rows = summarize_file(&cmd.input)?;
    write_rows(&cmd.out, &rows)
}

/// Summary rows of a regret CSV; a summary CSV is read back unchanged.
pub fn summarize_file(path: &Path) -> Result<Vec<SummaryRow>> {
    let header = read_header(path)?;
    if header == SummaryRow::HEADER {
        return read_rows(path);
    }
    if header != RunRecord::HEADER {
        return Err(BenchError::Invalid(format!("{}: not a regret or summary CSV", path.display())));
    }
    Ok(summarize(&read_rows::<RunRecord>(path)?))
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::BenchProj(cmd) => {
            let args = BenchArgs {
                arms: cmd.arms.clone(),
                m: cmd.m,
                iterations: cmd.iterations,
                eps: cmd.eps,
                eta: cmd.eta,
                regularizers: cmd.regularizer.clone(),
                seed: cmd.seed,
            };
            write_rows(&cmd.out, &bench_projection(&args)?)
        }
        Command::Regret(cmd) => run_regret(cmd),
        Command::Summarize(cmd) => run_summarize(cmd),
    }
}

/// Parses `argv` and runs; returns the process exit code (2 on usage
/// errors, 1 on runtime errors).
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
