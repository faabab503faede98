//! Context-free online stochastic mirror descent over m-sets.
//!
//! Each round decomposes the iterate `Ā_t`, samples an action, observes the
//! losses of the played arms, forms the importance-weighted estimate
//! `ℓ̂_k = (A_t)_k ℓ_k / (Ā_t)_k` and moves to the Bregman projection of
//! `∇F(Ā_t) − η ℓ̂`, computed by bisection.

use std::time::Instant;

use rand::Rng;

use crate::environment::{instantaneous_regret, Environment};
use crate::model::{ActionVector, MeanAction, ProblemConfig};
use crate::projection::{bisect_project, Solution};
use crate::record::RunRecord;
use crate::regularizer::Regularizer;
use crate::rng::{self, Stream};
use crate::sampling::{decompose, sample_action};
use crate::{Error, Result};

/// Smallest iterate coordinate that may be divided by.
pub const DIVISION_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OsmdState {
    pub abar: MeanAction,
    pub eta: f64,
    pub reg: Regularizer,
    pub round: usize,
}

/// Outcome of one round.
#[derive(Debug, Clone, PartialEq)]
pub struct OsmdStep {
    pub action: ActionVector,
    /// `⟨A_t, ℓ_t⟩`.
    pub round_loss: f64,
    pub estimate: Vec<f64>,
    pub solution: Solution,
}

/// `η = √(m ln(K/m) / (K T))`; for `m = K` the logarithm is replaced by 1.
pub fn default_eta(arms: usize, m: usize, horizon: usize) -> f64 {
    let log = (arms as f64 / m as f64).ln();
    let log = if log > 0.0 { log } else { 1.0 };
    (m as f64 * log / (arms as f64 * horizon as f64)).sqrt()
}

/// Starts at the uniform point `m/K`, the minimizer of every symmetric
/// separable potential over the capped simplex.
pub fn osmd_init(config: &ProblemConfig, reg: Regularizer, eta: f64) -> Result<OsmdState> {
    config.validate()?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Config(format!("learning rate must be positive, got {eta}")));
    }
    Ok(OsmdState { abar: MeanAction::uniform(config.arms, config.m), eta, reg, round: 0 })
}

/// `ℓ̂_k = (A)_k ℓ_k / Ā_k`; only the played coordinates of `losses` are read.
pub fn importance_weighted(action: &ActionVector, losses: &[f64], abar: &MeanAction) -> Result<Vec<f64>> {
    if losses.len() != action.len() || abar.len() != action.len() {
        return Err(Error::Dimension { expected: action.len(), got: losses.len().min(abar.len()) });
    }
    let mut out = vec![0.0; action.len()];
    for k in action.support() {
        let p = abar[k];
        if p < DIVISION_GUARD {
            return Err(Error::DivisionGuard { arm: k, prob: p });
        }
        out[k] = losses[k] / p;
    }
    Ok(out)
}

/// One round against the loss vector `losses` (semi-bandit: only the played
/// coordinates are used).
pub fn osmd_round<R: Rng + ?Sized>(
    state: &mut OsmdState,
    config: &ProblemConfig,
    losses: &[f64],
    rng: &mut R,
) -> Result<OsmdStep> {
    let decomp = decompose(&state.abar, config.m)?;
    let action = sample_action(&decomp, rng);
    osmd_update(state, config, action, losses)
}

/// The update for an already chosen action.
pub fn osmd_update(
    state: &mut OsmdState,
    config: &ProblemConfig,
    action: ActionVector,
    losses: &[f64],
) -> Result<OsmdStep> {
    let estimate = importance_weighted(&action, losses, &state.abar)?;
    let round_loss = action.dot(losses);
    let solution = bisect_project(state.eta, &estimate, &state.abar, config, &state.reg)?;
    state.abar = solution.point.clone();
    state.round += 1;
    Ok(OsmdStep { action, round_loss, estimate, solution })
}

/// Full run against `env`, one record per round.
pub fn run_osmd(
    env: &mut Environment,
    config: &ProblemConfig,
    reg: Regularizer,
    eta: f64,
    run_id: &str,
) -> Result<Vec<RunRecord>> {
    let mut state = osmd_init(config, reg, eta)?;
    let mut policy = rng::stream(config.seed, Stream::Policy);
    let mut records = Vec::with_capacity(config.horizon);
    let mut regret = 0.0;
    for t in 1..=config.horizon {
        let x = env.next_context();
        let losses = env.gen_losses(t, &x).losses;
        let entropy = state.abar.entropy();
        let start = Instant::now();
        let step = osmd_round(&mut state, config, &losses, &mut policy)?;
        let wall_ns = start.elapsed().as_nanos() as u64;
        regret += instantaneous_regret(&losses, &step.action, &env.optimal_action(&x));
        records.push(RunRecord {
            run_id: run_id.to_string(),
            seed: config.seed,
            t,
            regime: env.spec().regime.to_string(),
            algo: "osmd".into(),
            arms: config.arms,
            m: config.m,
            d: config.dim,
            action: step.action.to_bitstring(),
            round_loss: step.round_loss,
            cum_regret: regret,
            eta_t: eta,
            gamma_t: 0.0,
            resamples: 0,
            entropy_t: entropy,
            wall_ns,
        });
    }
    Ok(records)
}
