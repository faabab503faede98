//! Contextual best-of-both-worlds FTRL for m-set semi-bandits.
//!
//! Per round `t` with context `X_t`:
//!
//! 1. `Ā_t(X_t) = argmin ⟨a, L_{t−1}(X_t)⟩ − H(a)/η_t` over the capped simplex,
//!    solved by bisection in FTRL mode with the negative Shannon potential.
//! 2. Play `A_t ~ π_t = (1 − γ_t)·decomp(Ā_t) + γ_t·Unif(E)`.
//! 3. Estimate the per-arm precision matrices by matrix geometric resampling
//!    with `M_t` fresh `(X(n), A(n))` pairs drawn under `π_t`:
//!    `Σ̂⁺_k = (I + Σ_n C_{n,k})/2`, `C_{n,k} = C_{n−1,k}(I − (A(n))_k X(n)X(n)ᵀ/2)`.
//! 4. `θ̃_{t,k} = Σ̂⁺_k X_t ℓ_t(X_t, k) (A_t)_k` and `L_t(x)_k = Σ_s ⟨x, θ̃_{s,k}⟩`.
//!
//! Schedule, with `ℓ_T = ln(T + 1)` and `H_m = m ln(K/m)`:
//!
//! ```text
//! c₁ = √((d + ℓ_T/λ)·K·ℓ_T / H_m),   c₂ = 8K/λ
//! β_t = max{2, c₂ ℓ_T, β′_t},  β′₁ = c₁,  β′_{t+1} = β′_t + c₁ (1 + Σ_{s≤t} H(Ā_s)/H_m)^{−1/2}
//! η_t = 1/β_t,  α_t = 4K ln(t+1)/λ,  γ_t = α_t η_t,  M_t = ⌈4K ln(t+1)/(γ_t λ)⌉
//! ```
//!
//! The `t + 1` inside the logarithms avoids the degenerate `α₁ = 0`; using
//! `ℓ_T = ln(T + 1)` keeps `γ_t ≤ 1/2` up to and including `t = T`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::environment::{instantaneous_regret, Environment};
use crate::model::{ActionVector, Context, MeanAction, ProblemConfig};
use crate::projection::{bisect_offsets_into, capped_softmax_into, Bracket};
use crate::record::RunRecord;
use crate::regularizer::Regularizer;
use crate::rng::{self, Stream};
use crate::sampling::{decompose, exploration_set, mix_exploration, LazySampler};
use crate::{Error, Result};

/// Slack on the entropy range check.
const ENTROPY_SLACK: f64 = 1e-9;

/// Learning-rate schedule state.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleState {
    pub beta_prime: f64,
    pub cum_entropy: f64,
    pub c1: f64,
    pub c2: f64,
    /// Current round (1-based).
    pub t: usize,
    arms: usize,
    lambda_min: f64,
    log_horizon: f64,
    max_entropy: f64,
    horizon: usize,
}

/// Parameters in force on one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundParams {
    pub t: usize,
    pub beta: f64,
    pub eta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub resamples: usize,
}

impl ScheduleState {
    pub fn new(config: &ProblemConfig) -> Result<Self> {
        config.validate()?;
        let (k, m) = (config.arms as f64, config.m as f64);
        let max_entropy = m * (k / m).ln();
        if !(max_entropy > 0.0) {
            return Err(Error::Config("the contextual learner needs m < K".into()));
        }
        let log_horizon = (config.horizon as f64 + 1.0).ln();
        let lambda = config.lambda_min;
        let c1 = ((config.dim as f64 + log_horizon / lambda) * k * log_horizon / max_entropy).sqrt();
        Ok(ScheduleState {
            beta_prime: c1.max(1.0),
            cum_entropy: 0.0,
            c1,
            c2: 8.0 * k / lambda,
            t: 1,
            arms: config.arms,
            lambda_min: lambda,
            log_horizon,
            max_entropy,
            horizon: config.horizon,
        })
    }

    /// `m ln(K/m)`, the largest attainable entropy of a mean action.
    pub fn max_entropy(&self) -> f64 {
        self.max_entropy
    }

    /// Parameters for the current round.
    pub fn current(&self) -> Result<RoundParams> {
        let t = self.t;
        let beta = 2f64.max(self.c2 * self.log_horizon).max(self.beta_prime);
        let eta = 1.0 / beta;
        let log_t = (t as f64 + 1.0).ln();
        let k = self.arms as f64;
        let alpha = 4.0 * k * log_t / self.lambda_min;
        // β ≥ c₂ ln(T+1) bounds γ by ln(t+1)/(2 ln(T+1)); taking the bound
        // explicitly keeps rounding from pushing γ past 1/2 at t = T.
        let gamma = (alpha * eta).min(0.5 * log_t / self.log_horizon);
        let resamples = (4.0 * k * log_t / (gamma * self.lambda_min)).ceil() as usize;
        if !(0.0..=0.5).contains(&gamma) {
            return Err(Error::Schedule { round: t, what: format!("γ = {gamma} outside [0, 1/2]") });
        }
        if eta > 0.5 {
            return Err(Error::Schedule { round: t, what: format!("η = {eta} exceeds 1/2") });
        }
        if t > self.horizon {
            return Err(Error::Schedule { round: t, what: format!("round beyond horizon {}", self.horizon) });
        }
        Ok(RoundParams { t, beta, eta, alpha, gamma, resamples })
    }

    /// Records `H(Ā_t(X_t))` for the current round, advances to `t + 1` and
    /// returns the parameters of the new round.
    pub fn schedule_step(&mut self, new_entropy: f64) -> Result<RoundParams> {
        if !(new_entropy >= -ENTROPY_SLACK && new_entropy <= self.max_entropy + ENTROPY_SLACK) {
            return Err(Error::Schedule {
                round: self.t,
                what: format!("entropy {new_entropy} outside [0, {}]", self.max_entropy),
            });
        }
        self.cum_entropy += new_entropy.clamp(0.0, self.max_entropy);
        self.beta_prime += self.c1 / (1.0 + self.cum_entropy / self.max_entropy).sqrt();
        self.t += 1;
        self.current()
    }
}

/// Per-arm cumulative estimates `Σ_s θ̃_{s,k}`, scored against any context.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeLoss {
    dim: usize,
    sums: Vec<f64>,
}

impl CumulativeLoss {
    pub fn new(arms: usize, dim: usize) -> Self {
        CumulativeLoss { dim, sums: vec![0.0; arms * dim] }
    }

    pub fn arms(&self) -> usize {
        self.sums.len() / self.dim
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.sums[k * self.dim..(k + 1) * self.dim]
    }

    /// `L(x)_k = ⟨x, Σ_s θ̃_{s,k}⟩` for every arm.
    pub fn scores_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.sums.chunks_exact(self.dim)) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn scores(&self, x: &Context) -> Vec<f64> {
        let mut out = vec![0.0; self.arms()];
        self.scores_into(x.as_slice(), &mut out);
        out
    }

    pub fn add(&mut self, theta: &ThetaEstimate) {
        for (k, v) in theta.rows.iter().enumerate() {
            for (s, x) in self.sums[k * self.dim..(k + 1) * self.dim].iter_mut().zip(v.iter()) {
                *s += x;
            }
        }
    }
}

/// `argmin ⟨a, L⟩ − H(a)/η` over the capped simplex, i.e. the FTRL-mode
/// bisection with offsets `c_k = η L_k`. Writes into `out`; `scratch` holds
/// the offsets.
pub fn ftrl_mean_action_into(
    scores: &[f64],
    eta: f64,
    m: usize,
    eps: f64,
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<(usize, Bracket)> {
    if !(eta > 0.0) {
        return Err(Error::Domain { what: "learning rate", value: eta });
    }
    for (c, &l) in scratch.iter_mut().zip(scores) {
        *c = eta * l;
    }
    bisect_offsets_into(scratch, m, &Regularizer::shannon(), eps, out)
}

pub fn ftrl_mean_action(
    cum: &CumulativeLoss,
    context: &Context,
    eta: f64,
    config: &ProblemConfig,
) -> Result<MeanAction> {
    let scores = cum.scores(context);
    let mut scratch = vec![0.0; scores.len()];
    let mut out = vec![0.0; scores.len()];
    ftrl_mean_action_into(&scores, eta, config.m, config.eps_proj, &mut scratch, &mut out)?;
    Ok(MeanAction::from_vec_unchecked(out))
}

/// Per-arm precision estimates `Σ̂⁺_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEstimate {
    pub matrices: Vec<DMatrix<f64>>,
    pub resamples: usize,
}

impl PrecisionEstimate {
    /// Largest operator norm (largest singular value) over arms.
    pub fn max_op_norm(&self) -> f64 {
        self.matrices.iter().map(op_norm).fold(0.0, f64::max)
    }

    /// `(M + 1)/2`.
    pub fn op_bound(&self) -> f64 {
        (self.resamples as f64 + 1.0) / 2.0
    }
}

pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

/// Reusable buffers for [`mgr_estimate_with`].
#[derive(Debug, Clone)]
pub struct MgrWorkspace {
    current: Vec<DMatrix<f64>>,
    sums: Vec<DMatrix<f64>>,
    marks: Vec<usize>,
    v: DVector<f64>,
}

impl MgrWorkspace {
    pub fn new(arms: usize, dim: usize) -> Self {
        MgrWorkspace {
            current: vec![DMatrix::identity(dim, dim); arms],
            sums: vec![DMatrix::zeros(dim, dim); arms],
            marks: vec![0; arms],
            v: DVector::zeros(dim),
        }
    }
}

/// Matrix geometric resampling with `resamples` draws from `draw`, which
/// must write a fresh context into its first argument and return the
/// selected arms of a fresh action under the current policy.
///
/// `C_{n,k}` only changes on draws that select arm `k`, so the running sum
/// adds the held matrix once per change, weighted by how long it was held.
pub fn mgr_estimate_with<F>(
    arms: usize,
    dim: usize,
    resamples: usize,
    ws: &mut MgrWorkspace,
    mut draw: F,
) -> Result<PrecisionEstimate>
where
    F: FnMut(&mut [f64]) -> Result<ActionVector>,
{
    for k in 0..arms {
        ws.current[k].fill_with_identity();
        ws.sums[k].fill(0.0);
        ws.marks[k] = 0;
    }
    let mut xbuf = vec![0.0; dim];
    for n in 1..=resamples {
        let action = draw(&mut xbuf)?;
        for k in action.support() {
            let held = (n - 1 - ws.marks[k]) as f64;
            if held > 0.0 {
                add_scaled(&mut ws.sums[k], held, &ws.current[k]);
            }
            ws.marks[k] = n - 1;
            rank_one_step(ws.current[k].as_mut_slice(), xbuf.as_slice(), ws.v.as_mut_slice());
        }
    }
    let matrices = (0..arms)
        .map(|k| {
            let held = (resamples - ws.marks[k]) as f64;
            let mut s = ws.sums[k].clone();
            add_scaled(&mut s, held, &ws.current[k]);
            for i in 0..dim {
                s[(i, i)] += 1.0;
            }
            s * 0.5
        })
        .collect();
    Ok(PrecisionEstimate { matrices, resamples })
}

/// `C ← C − (C x) xᵀ / 2` on column-major `d × d` storage.
#[inline]
fn rank_one_step(c: &mut [f64], x: &[f64], v: &mut [f64]) {
    let d = x.len();
    v.fill(0.0);
    for (col, &xj) in c.chunks_exact(d).zip(x) {
        for (vi, &cij) in v.iter_mut().zip(col) {
            *vi += cij * xj;
        }
    }
    for (col, &xj) in c.chunks_exact_mut(d).zip(x) {
        for (cij, &vi) in col.iter_mut().zip(v.iter()) {
            *cij -= 0.5 * vi * xj;
        }
    }
}

fn add_scaled(acc: &mut DMatrix<f64>, w: f64, m: &DMatrix<f64>) {
    for (a, b) in acc.as_mut_slice().iter_mut().zip(m.as_slice()) {
        *a += w * b;
    }
}

/// Convenience wrapper allocating its own workspace; `draw` returns a fresh
/// `(context, action)` pair.
pub fn mgr_estimate<F>(arms: usize, dim: usize, resamples: usize, mut draw: F) -> Result<PrecisionEstimate>
where
    F: FnMut() -> Result<(Context, ActionVector)>,
{
    let mut ws = MgrWorkspace::new(arms, dim);
    mgr_estimate_with(arms, dim, resamples, &mut ws, |x| {
        let (ctx, a) = draw()?;
        x.copy_from_slice(ctx.as_slice());
        Ok(a)
    })
}

/// Per-arm loss-vector estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaEstimate {
    pub rows: Vec<DVector<f64>>,
}

/// `θ̃_k = Σ̂⁺_k x ℓ_k (A)_k`; only the played coordinates of `losses` are read.
pub fn theta_tilde(
    precision: &PrecisionEstimate,
    context: &Context,
    losses: &[f64],
    action: &ActionVector,
) -> ThetaEstimate {
    let dim = context.dim();
    let x = DVector::from_column_slice(context.as_slice());
    let rows = (0..action.len())
        .map(|k| {
            if action.get(k) {
                &precision.matrices[k] * &x * losses[k]
            } else {
                DVector::zeros(dim)
            }
        })
        .collect();
    ThetaEstimate { rows }
}

/// Per-round quantities checked by the invariant tests.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub params: RoundParams,
    /// `H(Ā_t(X_t))`.
    pub entropy: f64,
    pub max_entropy: f64,
    /// `max_k ‖Σ̂⁺_{t,k}‖_op`, when diagnostics are enabled.
    pub op_norm: Option<f64>,
    /// `max_k |η_t ⟨X_t, θ̃_{t,k}⟩|`.
    pub scaled_loss: f64,
    pub mean_action: MeanAction,
    pub bisection_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutput {
    pub record: RunRecord,
    pub diagnostics: Diagnostics,
}

/// Iterator over the rounds of a contextual run.
///
/// Yields one [`RoundOutput`] per round; an error is yielded once and ends
/// the run.
pub struct ContextualRun<'a> {
    env: &'a mut Environment,
    config: ProblemConfig,
    run_id: String,
    schedule: ScheduleState,
    params: RoundParams,
    cum: CumulativeLoss,
    exploration: Vec<ActionVector>,
    policy: rng::Rng,
    resampling: rng::Rng,
    workspace: MgrWorkspace,
    inner: Vec<f64>,
    order: Vec<usize>,
    sampler: LazySampler,
    regret: f64,
    op_norms: bool,
    failed: bool,
}

impl<'a> ContextualRun<'a> {
    pub fn new(env: &'a mut Environment, config: &ProblemConfig, run_id: &str) -> Result<Self> {
        if env.arms() != config.arms || env.spec().dim() != config.dim {
            return Err(Error::Dimension { expected: config.arms, got: env.arms() });
        }
        let schedule = ScheduleState::new(config)?;
        let params = schedule.current()?;
        Ok(ContextualRun {
            run_id: run_id.to_string(),
            params,
            schedule,
            cum: CumulativeLoss::new(config.arms, config.dim),
            exploration: exploration_set(config.arms, config.m, config.slack_arms),
            policy: rng::stream(config.seed, Stream::Policy),
            resampling: rng::stream(config.seed, Stream::Resampling),
            workspace: MgrWorkspace::new(config.arms, config.dim),
            inner: vec![0.0; config.arms],
            order: Vec::with_capacity(config.arms),
            sampler: LazySampler::new(),
            regret: 0.0,
            op_norms: false,
            failed: false,
            config: config.clone(),
            env,
        })
    }

    /// Also compute operator norms of the precision estimates every round.
    pub fn with_op_norms(mut self, on: bool) -> Self {
        self.op_norms = on;
        self
    }

    pub fn schedule(&self) -> &ScheduleState {
        &self.schedule
    }

    fn round(&mut self) -> Result<RoundOutput> {
        let p = self.params;
        let (arms, m, dim, eps) = (self.config.arms, self.config.m, self.config.dim, self.config.eps_proj);
        let x = self.env.next_context();
        let losses = self.env.gen_losses(p.t, &x).losses;

        let start = Instant::now();
        let mut scores = vec![0.0; arms];
        let mut scratch = vec![0.0; arms];
        let mut abar = vec![0.0; arms];
        self.cum.scores_into(x.as_slice(), &mut scores);
        let (steps, _) = ftrl_mean_action_into(&scores, p.eta, m, eps, &mut scratch, &mut abar)?;
        let abar = MeanAction::from_vec_unchecked(abar);
        let h = abar.entropy();
        let decomp = decompose(&abar, m)?;
        let action = mix_exploration(&decomp, p.gamma, &self.exploration, &mut self.policy);

        let (cum, env, exploration, resampling) =
            (&self.cum, &mut *self.env, &self.exploration, &mut self.resampling);
        // Resampling draws follow the same policy; the FTRL point is computed
        // in closed form and its decomposition is sampled lazily.
        let (inner, order, sampler) = (&mut self.inner, &mut self.order, &mut self.sampler);
        let precision = mgr_estimate_with(arms, dim, p.resamples, &mut self.workspace, |xbuf| {
            let xn = env.oracle_context();
            xbuf.copy_from_slice(xn.as_slice());
            cum.scores_into(xbuf, &mut scores);
            for (c, &l) in scratch.iter_mut().zip(scores.iter()) {
                *c = p.eta * l;
            }
            if p.gamma > 0.0 && resampling.random::<f64>() < p.gamma {
                return Ok(exploration[resampling.random_range(0..exploration.len())].clone());
            }
            capped_softmax_into(&scratch, m, order, inner)?;
            Ok(sampler.sample(inner, m, resampling))
        })?;
        let theta = theta_tilde(&precision, &x, &losses, &action);
        let scaled_loss = theta
            .rows
            .iter()
            .map(|v| (p.eta * x.dot(v.as_slice())).abs())
            .fold(0.0, f64::max);
        self.cum.add(&theta);
        let wall_ns = start.elapsed().as_nanos() as u64;

        let op_norm = self.op_norms.then(|| precision.max_op_norm());
        self.regret += instantaneous_regret(&losses, &action, &self.env.optimal_action(&x));
        let record = RunRecord {
            run_id: self.run_id.clone(),
            seed: self.config.seed,
            t: p.t,
            regime: self.env.spec().regime.to_string(),
            algo: "ftrl".into(),
            arms,
            m,
            d: dim,
            action: action.to_bitstring(),
            round_loss: action.dot(&losses),
            cum_regret: self.regret,
            eta_t: p.eta,
            gamma_t: p.gamma,
            resamples: p.resamples,
            entropy_t: h,
            wall_ns,
        };
        let diagnostics = Diagnostics {
            params: p,
            entropy: h,
            max_entropy: self.schedule.max_entropy(),
            op_norm,
            scaled_loss,
            mean_action: abar,
            bisection_steps: steps,
        };
        if p.t < self.config.horizon {
            self.params = self.schedule.schedule_step(h)?;
        } else {
            self.schedule.t += 1;
        }
        Ok(RoundOutput { record, diagnostics })
    }
}

impl Iterator for ContextualRun<'_> {
    type Item = Result<RoundOutput>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.params.t > self.config.horizon || self.schedule.t > self.config.horizon {
            return None;
        }
        let out = self.round();
        if out.is_err() {
            self.failed = true;
        }
        Some(out)
    }
}

/// Runs the learner to the horizon and collects the records.
pub fn run_contextual(env: &mut Environment, config: &ProblemConfig, run_id: &str) -> Result<Vec<RunRecord>> {
    ContextualRun::new(env, config, run_id)?.map(|r| r.map(|o| o.record)).collect()
}

/// Draws an action from `(1 − γ)·decomp(Ā) + γ·Unif(E)`.
pub fn sample_mixed<R: Rng + ?Sized>(
    abar: &MeanAction,
    m: usize,
    gamma: f64,
    exploration: &[ActionVector],
    rng: &mut R,
) -> Result<ActionVector> {
    let d = decompose(abar, m)?;
    Ok(mix_exploration(&d, gamma, exploration, rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ProblemConfig {
        ProblemConfig::new(8, 2, 1000, 3, 0.12)
    }

    #[test]
    fn first_round_uses_c1() {
        let s = ScheduleState::new(&config()).unwrap();
        assert_eq!(s.beta_prime, s.c1);
        assert_eq!(s.t, 1);
        let p = s.current().unwrap();
        assert!(p.gamma <= 0.5 && p.eta <= 0.5);
    }

    #[test]
    fn zero_entropy_grows_linearly() {
        let mut s = ScheduleState::new(&config()).unwrap();
        for t in 2..=500 {
            s.schedule_step(0.0).unwrap();
            assert!((s.beta_prime - s.c1 * t as f64).abs() < 1e-9 * s.c1 * t as f64);
        }
    }

    #[test]
    fn maximal_entropy_grows_like_sqrt() {
        let mut cfg = config();
        cfg.horizon = 10_000;
        let mut s = ScheduleState::new(&cfg).unwrap();
        let h = s.max_entropy();
        for t in 2..=10_000usize {
            s.schedule_step(h).unwrap();
            let ratio = s.beta_prime / (s.c1 * (t as f64).sqrt());
            assert!((0.5..=2.0).contains(&ratio), "t={t} ratio={ratio}");
        }
    }

    #[test]
    fn schedule_invariants_hold_to_the_horizon() {
        let cfg = ProblemConfig::new(6, 3, 300, 2, 0.5);
        let mut s = ScheduleState::new(&cfg).unwrap();
        let mut prev = s.current().unwrap();
        for _ in 2..=300 {
            let bp = s.beta_prime;
            let p = s.schedule_step(0.7 * s.max_entropy()).unwrap();
            assert!(p.eta <= prev.eta && (0.0..=0.5).contains(&p.gamma) && p.eta <= 0.5);
            assert!(s.beta_prime >= bp && s.beta_prime <= bp + s.c1 + 1e-12);
            prev = p;
        }
        assert!(s.schedule_step(0.0).is_err());
    }

    #[test]
    fn entropy_out_of_range_is_rejected() {
        let mut s = ScheduleState::new(&config()).unwrap();
        assert!(s.schedule_step(-0.1).is_err());
        assert!(s.schedule_step(s.max_entropy() + 0.1).is_err());
    }

    #[test]
    fn ftrl_examples() {
        let cfg = ProblemConfig { eps_proj: 1e-12, ..ProblemConfig::new(2, 1, 10, 1, 1.0) };
        let mut cum = CumulativeLoss::new(2, 1);
        let x = Context::new(vec![1.0]).unwrap();
        let a = ftrl_mean_action(&cum, &x, 1.0, &cfg).unwrap();
        assert!(a.coords().iter().all(|&v| (v - 0.5).abs() < 1e-12));
        cum.add(&ThetaEstimate { rows: vec![DVector::from_element(1, 3f64.ln()), DVector::zeros(1)] });
        let a = ftrl_mean_action(&cum, &x, 1.0, &cfg).unwrap();
        assert!((a[0] - 0.25).abs() < 1e-9 && (a[1] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn ftrl_cap_binding() {
        let cfg = ProblemConfig { eps_proj: 1e-12, ..ProblemConfig::new(3, 2, 10, 1, 1.0) };
        let mut cum = CumulativeLoss::new(3, 1);
        cum.add(&ThetaEstimate {
            rows: vec![DVector::from_element(1, -1e3), DVector::from_element(1, 0.0), DVector::from_element(1, 1.0)],
        });
        let a = ftrl_mean_action(&cum, &Context::new(vec![1.0]).unwrap(), 1.0, &cfg).unwrap();
        let e = (-1f64).exp();
        assert!((a[0] - 1.0).abs() < 1e-9);
        assert!((a[1] - 1.0 / (1.0 + e)).abs() < 1e-9 && (a[2] - e / (1.0 + e)).abs() < 1e-9, "{a:?}");
    }

    #[test]
    fn mgr_closed_cases() {
        let x = Context::new(vec![0.6, 0.8]).unwrap();
        let est = mgr_estimate(3, 2, 0, || Ok((x.clone(), ActionVector::from_support(3, &[0])))).unwrap();
        for mat in &est.matrices {
            assert_eq!(*mat, DMatrix::identity(2, 2) * 0.5);
        }
        let est = mgr_estimate(3, 2, 7, || Ok((x.clone(), ActionVector::from_support(3, &[0])))).unwrap();
        assert_eq!(est.matrices[1], DMatrix::identity(2, 2) * 4.0);
        assert!(est.max_op_norm() <= est.op_bound() + 1e-12);
        for big_m in [1usize, 2, 5, 20, 60] {
            let one = Context::new(vec![1.0]).unwrap();
            let est = mgr_estimate(1, 1, big_m, || Ok((one.clone(), ActionVector::from_support(1, &[0])))).unwrap();
            let expected = (2.0 - 0.5f64.powi(big_m as i32)) / 2.0;
            assert!((est.matrices[0][(0, 0)] - expected).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn lazy_accumulation_matches_direct_products() {
        let mut rng = rng::stream(3, Stream::Bench);
        let dim = 3;
        let draws: Vec<(Context, ActionVector)> = (0..40)
            .map(|_| {
                let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
                let k: Vec<usize> = (0..4).filter(|_| rng.random::<bool>()).collect();
                (Context::new(v).unwrap(), ActionVector::from_support(4, &k))
            })
            .collect();
        let mut it = draws.iter();
        let est = mgr_estimate(4, dim, draws.len(), || Ok(it.next().unwrap().clone())).unwrap();
        for k in 0..4 {
            let mut c = DMatrix::<f64>::identity(dim, dim);
            let mut s = DMatrix::<f64>::identity(dim, dim);
            for (x, a) in &draws {
                if a.get(k) {
                    let xv = DVector::from_column_slice(x.as_slice());
                    c = &c * (DMatrix::identity(dim, dim) - &xv * xv.transpose() * 0.5);
                }
                s += &c;
            }
            assert!((s * 0.5 - &est.matrices[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn theta_tilde_examples() {
        let est = PrecisionEstimate { matrices: vec![DMatrix::identity(2, 2) * 0.5; 2], resamples: 0 };
        let x = Context::new(vec![1.0, 0.0]).unwrap();
        let th = theta_tilde(&est, &x, &[1.0, 0.4], &ActionVector::from_support(2, &[0]));
        assert_eq!(th.rows[0].as_slice(), &[0.5, 0.0]);
        assert_eq!(th.rows[1].as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn requires_m_below_k() {
        assert!(ScheduleState::new(&ProblemConfig::new(3, 3, 10, 1, 1.0)).is_err());
    }
}
