//! Projection runtime benchmark.
//!
//! For every regularizer and `K` in the grid, `N` iterations are chained from
//! the uniform iterate: each draws a fresh loss vector uniformly from
//! `[−1, 1]^K`, times the bisection, Newton and reference solvers on the same
//! offsets, scores the first two against the reference and continues from the
//! bisection output. Timers wrap only the solve call.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use semibandit::model::MeanAction;
use semibandit::projection::{bisect_offsets, newton_offsets, offsets, reference_offsets, Solution};
use semibandit::rng::{substream, Stream};
use semibandit::{Regularizer, RegularizerKind};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bisection,
    Newton,
    Reference,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Bisection, Method::Newton, Method::Reference];
}

/// One timed solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub regularizer: RegularizerKind,
    pub method: Method,
    #[serde(rename = "K")]
    pub arms: usize,
    pub m: usize,
    pub iter_index: usize,
    pub wall_ns: u64,
    /// `‖a − a*‖₂` against the reference solver (zero on reference rows).
    pub residual_error: f64,
    /// Bisection steps, Newton iterations or reference refinement steps.
    pub bisection_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchArgs {
    pub arms: Vec<usize>,
    pub m: usize,
    pub iterations: usize,
    pub eps: f64,
    pub eta: f64,
    pub regularizers: Vec<RegularizerKind>,
    pub seed: u64,
}

impl Default for BenchArgs {
    fn default() -> Self {
        BenchArgs {
            arms: (1..=10).map(|i| 10 * i).collect(),
            m: 5,
            iterations: 25,
            eps: 1e-9,
            eta: 1.0,
            regularizers: vec![RegularizerKind::TsallisHalf, RegularizerKind::NegShannon],
            seed: 0,
        }
    }
}

fn timed(f: impl FnOnce() -> semibandit::Result<Solution>) -> semibandit::Result<(Solution, u64)> {
    let start = Instant::now();
    let s = f()?;
    Ok((s, start.elapsed().as_nanos() as u64))
}

pub fn bench_projection(args: &BenchArgs) -> Result<Vec<BenchRecord>> {
    let mut rows = Vec::with_capacity(args.regularizers.len() * args.arms.len() * 3 * args.iterations);
    for (ri, &kind) in args.regularizers.iter().enumerate() {
        let reg = Regularizer::new(kind);
        for &k in &args.arms {
            if args.m > k {
                return Err(crate::error::BenchError::Invalid(format!("m = {} exceeds K = {k}", args.m)));
            }
            let mut rng = substream(args.seed, Stream::Bench, ((ri as u64) << 32) | k as u64);
            let mut abar = MeanAction::uniform(k, args.m);
            for iter in 0..args.iterations {
                let loss: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let c = offsets(args.eta, &loss, abar.coords(), &reg)?;
                let (bis, t_bis) = timed(|| bisect_offsets(&c, args.m, &reg, args.eps))?;
                let (newton, t_newton) = timed(|| newton_offsets(&c, args.m, &reg, args.eps))?;
                let (reference, t_ref) = timed(|| reference_offsets(&c, args.m, &reg))?;
                for (method, sol, wall_ns) in [
                    (Method::Bisection, &bis, t_bis),
                    (Method::Newton, &newton, t_newton),
                    (Method::Reference, &reference, t_ref),
                ] {
                    let residual_error =
                        if method == Method::Reference { 0.0 } else { sol.point.distance(&reference.point) };
                    rows.push(BenchRecord {
                        regularizer: kind,
                        method,
                        arms: k,
                        m: args.m,
                        iter_index: iter,
                        wall_ns,
                        residual_error,
                        bisection_steps: sol.steps,
                    });
                }
                abar = bis.point;
            }
        }
    }
    Ok(rows)
}

/// Median wall time per `(regularizer, method, K)`.
pub fn median_times(rows: &[BenchRecord]) -> Vec<(RegularizerKind, Method, usize, f64)> {
    let mut keys: Vec<(RegularizerKind, Method, usize)> =
        rows.iter().map(|r| (r.regularizer, r.method, r.arms)).collect();
    keys.sort_by_key(|&(reg, method, k)| (reg.name(), method as u8, k));
    keys.dedup();
    keys.into_iter()
        .map(|(reg, method, k)| {
            let times: Vec<f64> = rows
                .iter()
                .filter(|r| r.regularizer == reg && r.method == method && r.arms == k)
                .map(|r| r.wall_ns as f64)
                .collect();
            (reg, method, k, crate::summary::median(&times))
        })
        .collect()
}
