//! Bregman projection onto the capped simplex `{a ∈ [0,1]^K : Σ a_k = m}`.
//!
//! The update `argmin_a η⟨a, ℓ̂⟩ + D_F(a, Ā)` for a separable `F` reduces,
//! through its KKT system, to finding the multiplier `λ` of the cardinality
//! constraint such that
//!
//! ```text
//! g(λ) = m − Σ_k (f')⁻¹(−λ − c_k) = 0,      c_k = η ℓ̂_k − f'(Ā_k).
//! ```
//!
//! With the inverse clamped to `[0, 1]` every coordinate map is nonincreasing
//! in `λ`, so `g` is nondecreasing and the caps `a_k = 1` are resolved by the
//! same scalar root. In FTRL mode the anchor is the all-ones vector and
//! `c_k = η L_k` (see [`ftrl_offsets`]).
//!
//! Solvers:
//! - [`bisect_offsets`]: fixed-length bisection with
//!   `⌈log₂(2L√K(λ̄ − λ̲)/ε)⌉` steps, returning a point within `ε` of the
//!   minimizer.
//! - [`approx_oracle_offsets`]: the same loop with a perturbed inverse oracle.
//! - [`newton_offsets`]: bracket-safeguarded Newton, a runtime baseline.
//! - [`reference_offsets`]: breakpoint root isolation followed by an exact or
//!   Newton-polished solve on the isolated piece; used as ground truth.

use log::debug;

use crate::model::MeanAction;
use crate::regularizer::{Regularizer, RegularizerKind};
use crate::{Error, ProblemConfig, Result};

/// Search interval for the multiplier `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Output of a projection solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub point: MeanAction,
    /// Bisection steps (bisection-type solvers) or iterations (Newton).
    pub steps: usize,
    /// Residual evaluations, including the two bracket checks.
    pub evaluations: usize,
    /// Newton steps replaced by a bisection step.
    pub safeguards: usize,
    pub bracket: Bracket,
}

/// `c_k = η ℓ̂_k − f'(Ā_k)`.
pub fn offsets(eta: f64, lhat: &[f64], abar: &[f64], reg: &Regularizer) -> Result<Vec<f64>> {
    if lhat.len() != abar.len() {
        return Err(Error::Dimension { expected: abar.len(), got: lhat.len() });
    }
    lhat.iter()
        .zip(abar)
        .map(|(&l, &a)| Ok(eta * l - reg.prime(a)?))
        .collect()
}

/// FTRL offsets `c_k = η L_k` for cumulative losses `L`.
pub fn ftrl_offsets(eta: f64, cumulative: &[f64]) -> Vec<f64> {
    cumulative.iter().map(|&l| eta * l).collect()
}

/// `λ̲ = min_k {−c_k − f'(m/K)}`, `λ̄ = max_k {−c_k − f'(m/K)}`.
pub fn initial_bracket(c: &[f64], m: usize, reg: &Regularizer) -> Bracket {
    let shift = reg.prime_unchecked(m as f64 / c.len() as f64);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &ck in c {
        let v = -ck - shift;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Bracket { lo, hi }
}

/// `g(λ) = m − Σ_k (f')⁻¹(−λ − c_k)` with the clamped inverse.
#[inline]
pub fn residual(lambda: f64, c: &[f64], m: usize, reg: &Regularizer) -> f64 {
    let mut total = 0.0;
    for &ck in c {
        total += reg.prime_inverse(-lambda - ck);
    }
    m as f64 - total
}

/// `⌈log₂(2L√K·width/ε)⌉`, zero when the argument is at most one.
pub fn bisection_steps(width: f64, lipschitz: f64, arms: usize, eps: f64) -> usize {
    let ratio = 2.0 * lipschitz * (arms as f64).sqrt() * width / eps;
    if ratio <= 1.0 {
        0
    } else {
        ratio.log2().ceil() as usize
    }
}

/// Projection objective up to an additive constant: `Σ_k f(a_k) + c_k a_k`.
pub fn objective(a: &[f64], c: &[f64], reg: &Regularizer) -> Result<f64> {
    a.iter()
        .zip(c)
        .map(|(&x, &ck)| Ok(reg.value(x.clamp(0.0, 1.0))? + ck * x))
        .sum()
}

fn check_inputs(c: &[f64], m: usize, eps: f64) -> Result<()> {
    if c.is_empty() || m == 0 || m > c.len() {
        return Err(Error::Config(format!("need 1 ≤ m ≤ K, got m = {m}, K = {}", c.len())));
    }
    if !(eps > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {eps}")));
    }
    if let Some(bad) = c.iter().find(|x| !x.is_finite()) {
        return Err(Error::Domain { what: "offset", value: *bad });
    }
    Ok(())
}

/// Widens the bracket until `g(lo) ≤ 0 ≤ g(hi)`. The initial bracket
/// straddles the root analytically; widening only absorbs rounding.
fn straddle(
    mut bracket: Bracket,
    mut g: impl FnMut(f64) -> f64,
) -> Result<Bracket> {
    let (mut g_lo, mut g_hi) = (g(bracket.lo), g(bracket.hi));
    let mut pad = 1e-12 * bracket.lo.abs().max(bracket.hi.abs()).max(1.0);
    for _ in 0..64 {
        if g_lo <= 0.0 && g_hi >= 0.0 {
            return Ok(bracket);
        }
        if g_lo > 0.0 {
            bracket.lo -= pad;
            g_lo = g(bracket.lo);
        }
        if g_hi < 0.0 {
            bracket.hi += pad;
            g_hi = g(bracket.hi);
        }
        pad *= 2.0;
    }
    Err(Error::BracketFailure { lo: bracket.lo, hi: bracket.hi, g_lo, g_hi })
}

/// Clips to `[floor, 1]` and restores `Σ a_k = m` by moving the excess or
/// deficit over interior coordinates in proportion to their room.
pub(crate) fn restore_feasibility(a: &mut [f64], m: usize, floor: f64) {
    for x in a.iter_mut() {
        *x = x.clamp(floor, 1.0);
    }
    let deficit = m as f64 - a.iter().sum::<f64>();
    if deficit == 0.0 {
        return;
    }
    let room = |x: f64| if deficit > 0.0 { 1.0 - x } else { x - floor };
    let total: f64 = a.iter().map(|&x| room(x)).sum();
    if total <= 0.0 {
        return;
    }
    let scale = (deficit / total).clamp(-1.0, 1.0);
    for x in a.iter_mut() {
        *x = (*x + scale * room(*x)).clamp(floor, 1.0);
    }
}

/// Bisection return value: `a_k = m/K + y_k − (1/K) Σ_j y_j` with `y = (f')⁻¹(−λ − c)`.
fn centered_inverse(lambda: f64, c: &[f64], m: usize, reg: &Regularizer, out: &mut [f64]) {
    let mut sum = 0.0;
    for (o, &ck) in out.iter_mut().zip(c) {
        *o = reg.prime_inverse(-lambda - ck);
        sum += *o;
    }
    let shift = (m as f64 - sum) / c.len() as f64;
    for o in out.iter_mut() {
        *o += shift;
    }
}

/// Allocation-free bisection core. Writes the projected point into `out`
/// and returns `(steps, bracket)`.
pub fn bisect_offsets_into(
    c: &[f64],
    m: usize,
    reg: &Regularizer,
    eps: f64,
    out: &mut [f64],
) -> Result<(usize, Bracket)> {
    check_inputs(c, m, eps)?;
    let arms = c.len();
    let initial = initial_bracket(c, m, reg);
    if initial.width() == 0.0 {
        out.fill(m as f64 / arms as f64);
        return Ok((0, initial));
    }
    let bracket = straddle(initial, |l| residual(l, c, m, reg))?;
    let steps = bisection_steps(bracket.width(), reg.lipschitz(), arms, eps);
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if residual(mid, c, m, reg) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    centered_inverse(lo, c, m, reg, out);
    restore_feasibility(out, m, reg.floor);
    Ok((steps, bracket))
}

pub fn bisect_offsets(c: &[f64], m: usize, reg: &Regularizer, eps: f64) -> Result<Solution> {
    let mut out = vec![0.0; c.len()];
    let (steps, bracket) = bisect_offsets_into(c, m, reg, eps, &mut out)?;
    let evaluations = if steps == 0 && bracket.width() == 0.0 { 0 } else { steps + 2 };
    Ok(Solution { point: MeanAction::from_vec_unchecked(out), steps, evaluations, safeguards: 0, bracket })
}

/// OSMD update: bisection on `c_k = η ℓ̂_k − f'(Ā_k)`.
pub fn bisect_project(
    eta: f64,
    lhat: &[f64],
    abar: &MeanAction,
    config: &ProblemConfig,
    reg: &Regularizer,
) -> Result<Solution> {
    let c = offsets(eta, lhat, abar.coords(), reg)?;
    bisect_offsets(&c, config.m, reg, config.eps_proj)
}

/// Source of (possibly inexact) inverse-derivative evaluations.
pub trait InverseOracle {
    /// Approximates `(f')⁻¹(z)` for arm `k`.
    fn inverse(&mut self, reg: &Regularizer, k: usize, z: f64) -> f64;
}

/// The exact clamped inverse.
#[derive(Debug, Default, Clone, Copy)]
pub struct ExactInverse;

impl InverseOracle for ExactInverse {
    fn inverse(&mut self, reg: &Regularizer, _k: usize, z: f64) -> f64 {
        reg.prime_inverse(z)
    }
}

/// Adds `noise(k, z)` to the exact inverse. The closure is responsible for
/// keeping its magnitude within the advertised `τ`.
pub struct PerturbedInverse<F> {
    noise: F,
}

impl<F: FnMut(usize, f64) -> f64> PerturbedInverse<F> {
    pub fn new(noise: F) -> Self {
        PerturbedInverse { noise }
    }
}

impl<F: FnMut(usize, f64) -> f64> InverseOracle for PerturbedInverse<F> {
    fn inverse(&mut self, reg: &Regularizer, k: usize, z: f64) -> f64 {
        reg.prime_inverse(z) + (self.noise)(k, z)
    }
}

/// Largest oracle error for which the `ε` guarantee is retained: `ε/(2√K)`.
pub fn oracle_tolerance(eps: f64, arms: usize) -> f64 {
    eps / (2.0 * (arms as f64).sqrt())
}

/// Bisection driven by an approximate inverse oracle with error at most `tau`.
///
/// The loop length and return rule match [`bisect_offsets`]; the output is
/// mean-shifted to sum to `m`. With `strict`, `tau > ε/(2√K)` is rejected.
pub fn approx_oracle_offsets(
    c: &[f64],
    m: usize,
    reg: &Regularizer,
    eps: f64,
    tau: f64,
    oracle: &mut dyn InverseOracle,
    strict: bool,
) -> Result<Solution> {
    check_inputs(c, m, eps)?;
    if !(tau >= 0.0) {
        return Err(Error::Domain { what: "oracle tolerance", value: tau });
    }
    let arms = c.len();
    let bound = oracle_tolerance(eps, arms);
    if strict && tau > bound {
        return Err(Error::Tolerance { tau, bound });
    }
    let initial = initial_bracket(c, m, reg);
    if initial.width() == 0.0 {
        return Ok(Solution {
            point: MeanAction::uniform(arms, m),
            steps: 0,
            evaluations: 0,
            safeguards: 0,
            bracket: initial,
        });
    }
    let g = |lambda: f64, oracle: &mut dyn InverseOracle| {
        let total: f64 = c.iter().enumerate().map(|(k, &ck)| oracle.inverse(reg, k, -lambda - ck)).sum();
        m as f64 - total
    };
    let bracket = straddle(initial, |l| g(l, oracle)).or_else(|_| {
        // Oracle noise can flip the endpoint signs by up to Kτ; the exact
        // bracket is still valid for the sign test in the interior.
        straddle(initial, |l| residual(l, c, m, reg))
    })?;
    let steps = bisection_steps(bracket.width(), reg.lipschitz(), arms, eps);
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if g(mid, oracle) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut out: Vec<f64> = c.iter().enumerate().map(|(k, &ck)| oracle.inverse(reg, k, -lo - ck)).collect();
    let shift = (m as f64 - out.iter().sum::<f64>()) / arms as f64;
    for x in out.iter_mut() {
        *x += shift;
    }
    restore_feasibility(&mut out, m, reg.floor);
    Ok(Solution {
        point: MeanAction::from_vec_unchecked(out),
        steps,
        evaluations: steps + 3,
        safeguards: 0,
        bracket,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn approx_oracle_project(
    eta: f64,
    lhat: &[f64],
    abar: &MeanAction,
    config: &ProblemConfig,
    reg: &Regularizer,
    tau: f64,
    oracle: &mut dyn InverseOracle,
    strict: bool,
) -> Result<Solution> {
    let c = offsets(eta, lhat, abar.coords(), reg)?;
    approx_oracle_offsets(&c, config.m, reg, config.eps_proj, tau, oracle, strict)
}

/// Safeguarded Newton iteration on `g`, started at the bracket midpoint.
///
/// Stops once `|g(λ)| ≤ ε/2`: every coordinate moves monotonically in `λ`,
/// so `‖a(λ) − a*‖₂ ≤ ‖a(λ) − a*‖₁ = |g(λ)|`. Newton steps leaving the
/// current bracket are replaced by bisection steps.
pub fn newton_offsets(c: &[f64], m: usize, reg: &Regularizer, eps: f64) -> Result<Solution> {
    const MAX_ITER: usize = 500;
    check_inputs(c, m, eps)?;
    let arms = c.len();
    let initial = initial_bracket(c, m, reg);
    if initial.width() == 0.0 {
        return Ok(Solution {
            point: MeanAction::uniform(arms, m),
            steps: 0,
            evaluations: 0,
            safeguards: 0,
            bracket: initial,
        });
    }
    let mut evaluations = 0;
    let bracket = straddle(initial, |l| {
        evaluations += 1;
        residual(l, c, m, reg)
    })?;
    let width_tol = eps / (2.0 * reg.lipschitz() * (arms as f64).sqrt());
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let mut lambda = 0.5 * (lo + hi);
    let (mut steps, mut safeguards) = (0, 0);
    while steps < MAX_ITER {
        steps += 1;
        evaluations += 1;
        let (mut g, mut dg) = (m as f64, 0.0);
        for &ck in c {
            let z = -lambda - ck;
            g -= reg.prime_inverse(z);
            dg += reg.prime_inverse_derivative(z);
        }
        if g.abs() <= 0.5 * eps {
            break;
        }
        if g > 0.0 {
            hi = lambda;
        } else {
            lo = lambda;
        }
        if hi - lo <= width_tol {
            lambda = lo;
            break;
        }
        let newton = lambda - g / dg;
        if dg > 0.0 && newton > lo && newton < hi {
            lambda = newton;
        } else {
            safeguards += 1;
            debug!("newton safeguard at λ = {lambda}: step to {newton} leaves [{lo}, {hi}]");
            lambda = 0.5 * (lo + hi);
        }
    }
    let mut out = vec![0.0; arms];
    centered_inverse(lambda, c, m, reg, &mut out);
    restore_feasibility(&mut out, m, reg.floor);
    Ok(Solution { point: MeanAction::from_vec_unchecked(out), steps, evaluations, safeguards, bracket })
}

pub fn newton_baseline(
    eta: f64,
    lhat: &[f64],
    abar: &MeanAction,
    config: &ProblemConfig,
    reg: &Regularizer,
) -> Result<Solution> {
    let c = offsets(eta, lhat, abar.coords(), reg)?;
    newton_offsets(&c, config.m, reg, config.eps_proj)
}

/// How a coordinate behaves on an isolated piece of `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Capped,
    Free,
    Zero,
}

/// Ground-truth solver.
///
/// The clamped coordinate maps change regime only at the breakpoints
/// `λ = −c_k − f'(1)` (cap) and `λ = −c_k − f'(0⁺)` (zero). The root is first
/// isolated between two consecutive breakpoints by binary search over the
/// sorted breakpoints, then the isolated interval is refined by bisection
/// until its width is below `10⁻¹⁴ max(1, |λ|)`, and finally the multiplier is
/// solved on the fixed active set (closed form for the Shannon and quadratic
/// potentials, Newton for Tsallis).
pub fn reference_offsets(c: &[f64], m: usize, reg: &Regularizer) -> Result<Solution> {
    check_inputs(c, m, 1.0)?;
    let mut evaluations = 0;
    let mut g = |l: f64| {
        evaluations += 1;
        residual(l, c, m, reg)
    };

    let (f1, f0) = (reg.prime_at_one(), reg.prime_at_zero());
    let mut breaks: Vec<f64> = c.iter().map(|&ck| -ck - f1).collect();
    if f0.is_finite() {
        breaks.extend(c.iter().map(|&ck| -ck - f0));
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite offsets"));
    breaks.dedup();

    // Below every cap breakpoint all coordinates sit at 1, so g ≤ 0 there.
    let first = breaks[0];
    let mut last = *breaks.last().expect("nonempty");
    if g(last) < 0.0 {
        let mut step = 1.0f64;
        let base = last;
        loop {
            last = base + step;
            if g(last) >= 0.0 {
                break;
            }
            step *= 2.0;
            if !last.is_finite() {
                return Err(Error::BracketFailure { lo: first, hi: last, g_lo: f64::NAN, g_hi: f64::NAN });
            }
        }
        breaks.push(last);
    }
    // Invariant: g(breaks[i]) ≤ 0 < g(breaks[j]) or g(breaks[j]) ≥ 0.
    let (mut i, mut j) = (0usize, breaks.len() - 1);
    while j - i > 1 {
        let mid = (i + j) / 2;
        if g(breaks[mid]) > 0.0 {
            j = mid;
        } else {
            i = mid;
        }
    }
    let (mut lo, mut hi) = (breaks[i], breaks[j]);
    let piece = Bracket { lo, hi };
    if g(lo) == 0.0 {
        hi = lo;
    }

    let mut steps = 0;
    while hi - lo > 1e-14 * (0.5 * (lo + hi)).abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    let mut lambda = 0.5 * (lo + hi);

    // Active set on the isolated piece, classified at its midpoint.
    let probe = 0.5 * (piece.lo + piece.hi);
    let status: Vec<Status> = c
        .iter()
        .map(|&ck| {
            if probe <= -ck - f1 {
                Status::Capped
            } else if f0.is_finite() && probe >= -ck - f0 {
                Status::Zero
            } else {
                Status::Free
            }
        })
        .collect();
    let free: Vec<f64> = c.iter().zip(&status).filter(|(_, s)| **s == Status::Free).map(|(&ck, _)| ck).collect();
    let capped = status.iter().filter(|s| **s == Status::Capped).count();
    let target = m as f64 - capped as f64;
    if !free.is_empty() && target > 0.0 && piece.hi > piece.lo {
        let solved = match reg.kind {
            RegularizerKind::NegShannon => {
                // Σ_F exp(−λ − c_k) = target.
                let top = free.iter().fold(f64::NEG_INFINITY, |acc, &ck| acc.max(-ck));
                let lse = top + free.iter().map(|&ck| (-ck - top).exp()).sum::<f64>().ln();
                lse - target.ln()
            }
            RegularizerKind::Quadratic => {
                // Σ_F (−λ − c_k)/2 = target.
                (-free.iter().sum::<f64>() - 2.0 * target) / free.len() as f64
            }
            RegularizerKind::TsallisHalf => {
                // Σ_F 1/(4(λ + c_k)²) = target, decreasing and convex in λ.
                let mut l = lambda;
                for _ in 0..50 {
                    let (mut h, mut dh) = (-target, 0.0);
                    for &ck in &free {
                        let u = l + ck;
                        h += 0.25 / (u * u);
                        dh += -0.5 / (u * u * u);
                    }
                    let next = l - h / dh;
                    let done = (next - l).abs() <= 4.0 * f64::EPSILON * next.abs().max(1.0);
                    l = next;
                    if done {
                        break;
                    }
                }
                l
            }
        };
        if solved.is_finite() {
            lambda = solved.clamp(piece.lo, piece.hi);
        }
    }

    let out: Vec<f64> = c.iter().map(|&ck| reg.prime_inverse(-lambda - ck)).collect();
    Ok(Solution {
        point: MeanAction::from_vec_unchecked(out),
        steps,
        evaluations,
        safeguards: 0,
        bracket: piece,
    })
}

/// Exact minimizer of `η⟨a, ℓ̂⟩ + D_F(a, Ā)` over the capped simplex.
pub fn reference_project(
    eta: f64,
    lhat: &[f64],
    abar: &MeanAction,
    m: usize,
    reg: &Regularizer,
) -> Result<Solution> {
    let c = offsets(eta, lhat, abar.coords(), reg)?;
    reference_offsets(&c, m, reg)
}

/// Closed-form Shannon/FTRL solve `a_k = min(1, e^{−λ−c_k})`: with the
/// offsets sorted ascending, the first `j` arms are capped for the smallest
/// `j` whose softmax share of the remaining mass keeps arm `j` below one.
/// `order` is scratch space. The result is clipped to the Shannon floor.
pub fn capped_softmax_into(c: &[f64], m: usize, order: &mut Vec<usize>, out: &mut [f64]) -> Result<()> {
    check_inputs(c, m, 1.0)?;
    let base = c.iter().copied().fold(f64::INFINITY, f64::min);
    for (o, &ck) in out.iter_mut().zip(c) {
        *o = (base - ck).exp();
    }
    let rest: f64 = out.iter().sum();
    // The largest coordinate is e^0 = 1 before scaling: no cap binds when
    // the softmax share m/rest stays at most one.
    if m as f64 <= rest {
        let scale = m as f64 / rest;
        out.iter_mut().for_each(|o| *o *= scale);
        restore_feasibility(out, m, crate::regularizer::DEFAULT_FLOOR);
        return Ok(());
    }
    order.clear();
    order.extend(0..c.len());
    order.sort_unstable_by(|&a, &b| c[a].partial_cmp(&c[b]).expect("finite offsets"));
    // Suffix sums relative to each arm's own offset,
    // `S_j = Σ_{i ≥ j} e^{c_(j) − c_(i)}`, reusing `out` in sorted order;
    // the exponents are nonpositive, so nothing overflows or underflows
    // to a zero total.
    let k = c.len();
    out[k - 1] = 1.0;
    for j in (0..k - 1).rev() {
        out[j] = 1.0 + out[j + 1] * (c[order[j]] - c[order[j + 1]]).exp();
    }
    // Smallest cap count j whose free share (m − j)/S_j keeps arm (j) ≤ 1.
    let capped = (0..m).find(|&j| (m - j) as f64 <= out[j]).unwrap_or(m);
    let (lead, scale) = if capped < m { (c[order[capped]], (m - capped) as f64 / out[capped]) } else { (0.0, 0.0) };
    // The suffix sums are no longer needed; overwrite by arm index.
    for (rank, &arm) in order.iter().enumerate() {
        out[arm] = if rank < capped { 1.0 } else { scale * (lead - c[arm]).exp() };
    }
    restore_feasibility(out, m, crate::regularizer::DEFAULT_FLOOR);
    Ok(())
}
