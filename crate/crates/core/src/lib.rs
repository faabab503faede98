//! Combinatorial semi-bandits over m-sets.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: actions, mean actions, contexts and the problem configuration.
//! - [`regularizer`]: separable potentials `F(a) = Σ f(a_k)` with a clamped
//!   inverse derivative.
//! - [`projection`]: the Bregman/FTRL update over the capped simplex, solved as
//!   a one-dimensional root-finding problem on the dual variable of the
//!   cardinality constraint; Newton and reference solvers for comparison.
//! - [`sampling`]: vertex decomposition of a mean action and action sampling.
//! - [`environment`]: synthetic adversarial, stochastic and corrupted
//!   environments with ground-truth optima.
//! - [`engine_osmd`]: context-free online stochastic mirror descent.
//! - [`engine_contextual`]: the contextual best-of-both-worlds FTRL learner
//!   with matrix geometric resampling.
//!
//! All randomness is derived from a single 64-bit seed, see [`rng`].

pub mod engine_contextual;
pub mod engine_osmd;
pub mod environment;
mod error;
pub mod model;
pub mod projection;
pub mod record;
pub mod regularizer;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
pub use model::{ActionVector, Context, MeanAction, ProblemConfig};
pub use regularizer::{Regularizer, RegularizerKind};
