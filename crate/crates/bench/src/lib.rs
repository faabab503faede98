//! Harness around the `semibandit` crate: a projection runtime benchmark,
//! parallel regret experiments and checkpoint summaries, all emitting CSV.
//!
//! CSV schemas (header row, RFC 4180 quoting):
//!
//! - benchmark: `regularizer,method,K,m,iter_index,wall_ns,residual_error,bisection_steps`
//! - regret: `run_id,seed,t,regime,algo,K,m,d,action,round_loss,cum_regret,eta_t,gamma_t,M_t,entropy_t,wall_ns`
//! - summary: `config,regime,algo,K,m,d,T,runs,median_regret,median_regret_over_sqrt_t,median_regret_over_ln_t`

pub mod bench_proj;
pub mod cli;
pub mod csvio;
mod error;
pub mod regret;
pub mod summary;

pub use error::{BenchError, Result};
