//! Regret experiments: many seeds of one configuration, run in parallel.

use std::fmt;
use std::str::FromStr;

use log::{error, info};
use rayon::prelude::*;

use semibandit::engine_contextual::run_contextual;
use semibandit::engine_osmd::{default_eta, run_osmd};
use semibandit::environment::{ContextDist, EnvSpec, Environment, Regime};
use semibandit::model::make_exact;
use semibandit::record::RunRecord;
use semibandit::{ProblemConfig, Regularizer, RegularizerKind};

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Ftrl,
    Osmd,
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::Ftrl => "ftrl",
            Algo::Osmd => "osmd",
        })
    }
}

impl FromStr for Algo {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "ftrl" => Ok(Algo::Ftrl),
            "osmd" => Ok(Algo::Osmd),
            other => Err(BenchError::Invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretArgs {
    pub algo: Algo,
    /// Used by OSMD only; the contextual learner is entropic.
    pub regularizer: RegularizerKind,
    /// Real arms.
    pub arms: usize,
    pub m: usize,
    pub dim: usize,
    pub horizon: usize,
    pub regime: Regime,
    pub corruption: f64,
    pub seeds: Vec<u64>,
    pub eps: f64,
    pub exact_m: bool,
    /// Learner's `λ_min`; the environment's true value when absent.
    pub lambda_min: Option<f64>,
}

impl Default for RegretArgs {
    fn default() -> Self {
        RegretArgs {
            algo: Algo::Ftrl,
            regularizer: RegularizerKind::TsallisHalf,
            arms: 8,
            m: 2,
            dim: 3,
            horizon: 4096,
            regime: Regime::Stochastic,
            corruption: 0.0,
            seeds: (0..20).collect(),
            eps: 1e-9,
            exact_m: true,
            lambda_min: None,
        }
    }
}

impl RegretArgs {
    /// Run identifier without the seed; rows of one configuration share it.
    pub fn group(&self) -> String {
        let reg = match self.algo {
            Algo::Ftrl => String::new(),
            Algo::Osmd => format!("-{}", self.regularizer),
        };
        format!(
            "{}{reg}-{}-C{}-K{}-m{}-d{}-T{}",
            self.algo, self.regime, self.corruption, self.arms, self.m, self.dim(), self.horizon
        )
    }

    /// Context dimension actually used: OSMD runs context-free.
    pub fn dim(&self) -> usize {
        match self.algo {
            Algo::Ftrl => self.dim,
            Algo::Osmd => 1,
        }
    }

    pub fn run_id(&self, seed: u64) -> String {
        format!("{}-s{seed}", self.group())
    }

    pub fn env_spec(&self, seed: u64) -> EnvSpec {
        let mut spec = EnvSpec::random(self.regime, self.arms, self.dim(), self.horizon, seed);
        spec.corruption_budget = self.corruption;
        if self.algo == Algo::Osmd {
            spec.context_dist = ContextDist::context_free();
        }
        spec
    }

    pub fn problem(&self, spec: &EnvSpec, seed: u64) -> ProblemConfig {
        let base = ProblemConfig {
            eps_proj: self.eps,
            exact_m: self.exact_m,
            seed,
            ..ProblemConfig::new(
                self.arms,
                self.m,
                self.horizon,
                self.dim(),
                self.lambda_min.unwrap_or_else(|| spec.lambda_min()),
            )
        };
        make_exact(&base)
    }
}

/// One seed of the configuration.
pub fn run_one(args: &RegretArgs, seed: u64) -> semibandit::Result<Vec<RunRecord>> {
    let spec = args.env_spec(seed);
    let config = args.problem(&spec, seed);
    config.validate()?;
    let mut env = Environment::new(spec, config.m, config.slack_arms, seed)?;
    let run_id = args.run_id(seed);
    match args.algo {
        Algo::Ftrl => run_contextual(&mut env, &config, &run_id),
        Algo::Osmd => {
            let eta = default_eta(config.arms, config.m, config.horizon);
            run_osmd(&mut env, &config, Regularizer::new(args.regularizer), eta, &run_id)
        }
    }
}

/// Outcome of an experiment: rows of the successful runs in seed order and
/// the failures.
#[derive(Debug)]
pub struct Experiment {
    pub records: Vec<RunRecord>,
    pub failures: Vec<(u64, semibandit::Error)>,
}

/// Runs every seed in parallel; failed runs are logged and excluded.
pub fn regret_experiment(args: &RegretArgs) -> Experiment {
    let results: Vec<(u64, semibandit::Result<Vec<RunRecord>>)> =
        args.seeds.par_iter().map(|&s| (s, run_one(args, s))).collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(rows) => {
                info!("{} finished: final regret {:.3}", args.run_id(seed), rows.last().map_or(0.0, |r| r.cum_regret));
                records.extend(rows);
            }
            Err(e) => {
                error!("{} failed: {e}", args.run_id(seed));
                failures.push((seed, e));
            }
        }
    }
    Experiment { records, failures }
}
