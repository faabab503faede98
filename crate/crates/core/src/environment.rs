//! Synthetic environments for the contextual semi-bandit protocol.
//!
//! Each round the environment draws an i.i.d. context, fixes the per-arm
//! coefficients `θ_{t,k}` (a fixed matrix, an oblivious phase schedule, or a
//! budgeted corruption of the fixed matrix) and reveals
//! `ℓ_t(x, k) = ⟨x, θ_{t,k}⟩ + ε(x, k)` on the played arms, clipped to `[−1, 1]`.
//!
//! Slack arms appended by [`crate::model::make_exact`] always carry zero loss.

use std::fmt;
use std::str::FromStr;

use log::info;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::{ActionVector, Context};
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "adv")]
    Adversarial,
    #[serde(rename = "stoch")]
    Stochastic,
    #[serde(rename = "corrupt")]
    Corrupted,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Adversarial => "adv",
            Regime::Stochastic => "stoch",
            Regime::Corrupted => "corrupt",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adv" => Ok(Regime::Adversarial),
            "stoch" => Ok(Regime::Stochastic),
            "corrupt" => Ok(Regime::Corrupted),
            other => Err(Error::Config(format!("unknown regime `{other}`"))),
        }
    }
}

/// Context distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ContextDist {
    /// `x = r·u`, `u` uniform on the unit sphere, `r ~ U[r_min, r_max]`.
    Ball { r_min: f64, r_max: f64 },
    /// Always the same context (context-free play when `d = 1`, `x = 1`).
    Fixed { x: Vec<f64> },
    /// Uniform over a finite support.
    Discrete { support: Vec<Vec<f64>> },
}

impl ContextDist {
    /// Default family: radius bounded away from zero so the gap is positive.
    pub fn default_ball() -> Self {
        ContextDist::Ball { r_min: 0.1, r_max: 1.0 }
    }

    pub fn context_free() -> Self {
        ContextDist::Fixed { x: vec![1.0] }
    }

    /// `Σ = E[x xᵀ]` in closed form.
    pub fn covariance(&self, dim: usize) -> DMatrix<f64> {
        match self {
            ContextDist::Ball { r_min, r_max } => {
                let second = if r_max > r_min {
                    (r_max.powi(3) - r_min.powi(3)) / (3.0 * (r_max - r_min))
                } else {
                    r_max * r_max
                };
                DMatrix::identity(dim, dim) * (second / dim as f64)
            }
            ContextDist::Fixed { x } => {
                let v = nalgebra::DVector::from_column_slice(x);
                &v * v.transpose()
            }
            ContextDist::Discrete { support } => {
                let mut s = DMatrix::zeros(dim, dim);
                for x in support {
                    let v = nalgebra::DVector::from_column_slice(x);
                    s += &v * v.transpose();
                }
                s / support.len() as f64
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Context {
        match self {
            ContextDist::Ball { r_min, r_max } => {
                let mut u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                let r = if r_max > r_min { rng.random_range(*r_min..*r_max) } else { *r_max };
                for v in u.iter_mut() {
                    *v *= r / norm;
                }
                Context::new_unchecked(u)
            }
            ContextDist::Fixed { x } => Context::new_unchecked(x.clone()),
            ContextDist::Discrete { support } => {
                Context::new_unchecked(support[rng.random_range(0..support.len())].clone())
            }
        }
    }
}

/// Environment description; serializable for config files and audit sidecars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub regime: Regime,
    /// Rows `θ_k` for the real arms.
    pub theta: Vec<Vec<f64>>,
    /// Noise `ε ~ U[−b, b]`; ignored in the adversarial regime.
    pub noise_bound: f64,
    /// Corruption budget `C`.
    pub corruption_budget: f64,
    pub context_dist: ContextDist,
    pub horizon: usize,
    /// Number of equal-length phases of the adversarial schedule.
    #[serde(default = "default_phases")]
    pub phases: usize,
}

fn default_phases() -> usize {
    4
}

impl EnvSpec {
    /// Random instance: `θ_k = ρ_k u_k` with `u_k` uniform on the sphere and
    /// `ρ_k ~ U[0.3, 0.7]`, noise bound `1 − max ‖θ_k‖`.
    pub fn random(regime: Regime, arms: usize, dim: usize, horizon: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, Stream::EnvInstance);
        let theta: Vec<Vec<f64>> = (0..arms)
            .map(|_| {
                let u = ContextDist::Ball { r_min: 0.3, r_max: 0.7 }.sample(dim, &mut rng);
                u.as_slice().to_vec()
            })
            .collect();
        let max_norm = theta.iter().map(|t| norm(t)).fold(0.0, f64::max);
        EnvSpec {
            regime,
            theta,
            noise_bound: (1.0 - max_norm).max(0.0),
            corruption_budget: 0.0,
            context_dist: ContextDist::default_ball(),
            horizon,
            phases: default_phases(),
        }
    }

    pub fn arms(&self) -> usize {
        self.theta.len()
    }

    pub fn dim(&self) -> usize {
        self.theta.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if self.theta.is_empty() || dim == 0 || self.theta.iter().any(|t| t.len() != dim) {
            return Err(Error::Config("theta must be a nonempty K×d matrix".into()));
        }
        if let Some(t) = self.theta.iter().find(|t| norm(t) > 1.0 + 1e-12) {
            return Err(Error::Config(format!("‖θ_k‖ = {} exceeds 1", norm(t))));
        }
        if !(self.noise_bound >= 0.0) || self.corruption_budget < 0.0 || self.horizon == 0 || self.phases == 0 {
            return Err(Error::Config("noise bound, budget, horizon or phases out of range".into()));
        }
        if self.lambda_min() <= 0.0 {
            return Err(Error::Config("context covariance must be positive definite".into()));
        }
        Ok(())
    }

    pub fn sigma(&self) -> DMatrix<f64> {
        self.context_dist.covariance(self.dim())
    }

    pub fn lambda_min(&self) -> f64 {
        SymmetricEigen::new(self.sigma()).eigenvalues.min()
    }

    /// Clean coefficients on round `t` (1-based), before corruption.
    pub fn theta_at(&self, t: usize) -> Vec<Vec<f64>> {
        match self.regime {
            Regime::Adversarial => {
                let p = self.phase(t);
                let k = self.arms();
                (0..k).map(|j| self.theta[(j + p) % k].clone()).collect()
            }
            _ => self.theta.clone(),
        }
    }

    fn phase(&self, t: usize) -> usize {
        ((t.saturating_sub(1)) * self.phases / self.horizon).min(self.phases - 1)
    }

    /// Coefficients defining the comparator `u*`: the fixed `θ`, or the
    /// horizon average of the adversarial schedule.
    pub fn comparator_theta(&self) -> Vec<Vec<f64>> {
        match self.regime {
            Regime::Adversarial => {
                let (k, d) = (self.arms(), self.dim());
                let mut avg = vec![vec![0.0; d]; k];
                let mut counts = vec![0usize; self.phases];
                for t in 1..=self.horizon {
                    counts[self.phase(t)] += 1;
                }
                for (p, &n) in counts.iter().enumerate() {
                    let w = n as f64 / self.horizon as f64;
                    for (j, row) in avg.iter_mut().enumerate() {
                        for (a, b) in row.iter_mut().zip(&self.theta[(j + p) % k]) {
                            *a += w * b;
                        }
                    }
                }
                avg
            }
            _ => self.theta.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn sample_context<R: Rng + ?Sized>(spec: &EnvSpec, rng: &mut R) -> Context {
    spec.context_dist.sample(spec.dim(), rng)
}

/// Losses revealed (and hidden) on one round, for every arm including slack.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLosses {
    pub losses: Vec<f64>,
    /// `max_A Σ_k ‖θ_{t,k} − θ_k‖ (A)_k` spent this round.
    pub corruption: f64,
}

/// A running environment instance with its own random streams.
#[derive(Debug, Clone)]
pub struct Environment {
    spec: EnvSpec,
    m: usize,
    slack_arms: usize,
    comparator: Vec<Vec<f64>>,
    contexts: rng::Rng,
    noise: rng::Rng,
    oracle: rng::Rng,
    remaining_budget: f64,
    spent: f64,
    exhausted_logged: bool,
}

impl Environment {
    pub fn new(spec: EnvSpec, m: usize, slack_arms: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        let comparator = spec.comparator_theta();
        let remaining_budget = if spec.regime == Regime::Corrupted { spec.corruption_budget } else { 0.0 };
        Ok(Environment {
            comparator,
            m,
            slack_arms,
            contexts: rng::stream(seed, Stream::EnvContext),
            noise: rng::stream(seed, Stream::EnvNoise),
            oracle: rng::stream(seed, Stream::ContextOracle),
            remaining_budget,
            spent: 0.0,
            exhausted_logged: false,
            spec,
        })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn arms(&self) -> usize {
        self.spec.arms() + self.slack_arms
    }

    pub fn total_corruption(&self) -> f64 {
        self.spent
    }

    /// The round's context.
    pub fn next_context(&mut self) -> Context {
        sample_context(&self.spec, &mut self.contexts)
    }

    /// Fresh i.i.d. context for resampling, from an independent stream.
    pub fn oracle_context(&mut self) -> Context {
        sample_context(&self.spec, &mut self.oracle)
    }

    /// Losses on round `t` (1-based, called once per round in order), clipped
    /// to `[−1, 1]`.
    pub fn gen_losses(&mut self, t: usize, context: &Context) -> RoundLosses {
        let mut theta = self.spec.theta_at(t);
        let mut corruption = 0.0;
        if self.spec.regime == Regime::Corrupted && self.remaining_budget > 0.0 {
            // Flip the coefficients toward −θ_k; the round costs 2s times the
            // sum of the m largest norms.
            let mut norms: Vec<f64> = theta.iter().map(|t| norm(t)).collect();
            norms.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
            let top: f64 = norms.iter().take(self.m).sum();
            if top > 0.0 {
                let s = (self.remaining_budget / (2.0 * top)).min(1.0);
                for row in theta.iter_mut() {
                    for v in row.iter_mut() {
                        *v *= 1.0 - 2.0 * s;
                    }
                }
                corruption = 2.0 * s * top;
                self.remaining_budget = (self.remaining_budget - corruption).max(0.0);
                self.spent += corruption;
            }
            if self.remaining_budget <= 0.0 && !self.exhausted_logged {
                info!("corruption budget exhausted at round {t}; continuing stochastically");
                self.exhausted_logged = true;
            }
        }
        let noisy = self.spec.regime != Regime::Adversarial && self.spec.noise_bound > 0.0;
        let b = self.spec.noise_bound;
        let mut losses: Vec<f64> = theta
            .iter()
            .map(|row| {
                let eps = if noisy { self.noise.random_range(-b..=b) } else { 0.0 };
                (context.dot(row) + eps).clamp(-1.0, 1.0)
            })
            .collect();
        losses.resize(self.arms(), 0.0);
        RoundLosses { losses, corruption }
    }

    /// `u*(x)` from the comparator coefficients, over all arms including slack.
    pub fn optimal_action(&self, context: &Context) -> ActionVector {
        let mut scores: Vec<f64> = self.comparator.iter().map(|row| context.dot(row)).collect();
        scores.resize(self.arms(), 0.0);
        optimal_action_from_scores(&scores, self.m, true)
    }

    /// Comparator scores `⟨x, θ_k⟩` for the real arms.
    pub fn clean_scores(&self, context: &Context) -> Vec<f64> {
        self.comparator.iter().map(|row| context.dot(row)).collect()
    }
}

/// `u*(x)` for coefficients `theta`: the `m` smallest `⟨x, θ_k⟩` (exact) or
/// the negative ones among them (`≤ m`). Ties go to the lowest index.
pub fn optimal_action(context: &Context, theta: &[Vec<f64>], m: usize, exact: bool) -> ActionVector {
    let scores: Vec<f64> = theta.iter().map(|row| context.dot(row)).collect();
    optimal_action_from_scores(&scores, m, exact)
}

pub fn optimal_action_from_scores(scores: &[f64], m: usize, exact: bool) -> ActionVector {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite").then(a.cmp(&b)));
    let chosen: Vec<usize> = order
        .into_iter()
        .take(m)
        .filter(|&k| exact || scores[k] < 0.0)
        .collect();
    ActionVector::from_support(scores.len(), &chosen)
}

/// `Σ_k ℓ_k ((A)_k − (u*)_k)`.
pub fn instantaneous_regret(losses: &[f64], action: &ActionVector, optimal: &ActionVector) -> f64 {
    action.dot(losses) - optimal.dot(losses)
}

/// Running sum of instantaneous regrets.
pub fn pseudo_regret(instants: &[f64]) -> Vec<f64> {
    instants
        .iter()
        .scan(0.0, |acc, &r| {
            *acc += r;
            Some(*acc)
        })
        .collect()
}

/// Smallest positive-or-zero gap `Δ_A(x)` over `A ≠ u*(x)` for one context.
///
/// Gaps add over single-arm modifications of `u*`, so the minimum is attained
/// by removing, adding or swapping one arm.
pub fn context_gap(scores: &[f64], m: usize, exact: bool) -> f64 {
    let u = optimal_action_from_scores(scores, m, exact);
    let inside: Vec<f64> = u.support().map(|k| scores[k]).collect();
    let outside: Vec<f64> = (0..scores.len()).filter(|&k| !u.get(k)).map(|k| scores[k]).collect();
    let max_in = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_out = outside.iter().copied().fold(f64::INFINITY, f64::min);
    let mut gap = f64::INFINITY;
    if !inside.is_empty() && !outside.is_empty() {
        gap = gap.min(min_out - max_in);
    }
    if !exact {
        if !inside.is_empty() {
            gap = gap.min(-max_in);
        }
        if inside.len() < m && !outside.is_empty() {
            gap = gap.min(min_out);
        }
    }
    gap
}

/// Sampled lower estimate of `Δ_min = min_x min_{A ≠ u*(x)} Δ_A(x)` over the
/// given contexts. A zero value flags a degenerate instance.
pub fn delta_min(theta: &[Vec<f64>], contexts: &[Context], m: usize, exact: bool) -> f64 {
    contexts
        .iter()
        .map(|x| {
            let scores: Vec<f64> = theta.iter().map(|row| x.dot(row)).collect();
            context_gap(&scores, m, exact)
        })
        .fold(f64::INFINITY, f64::min)
}

/// [`delta_min`] over `n` contexts drawn from the environment's context law.
pub fn delta_min_sampled(spec: &EnvSpec, m: usize, exact: bool, n: usize, seed: u64) -> f64 {
    let mut rng = rng::substream(seed, Stream::EnvContext, 0xD317A);
    let contexts: Vec<Context> = (0..n).map(|_| sample_context(spec, &mut rng)).collect();
    delta_min(&spec.comparator_theta(), &contexts, m, exact)
}
