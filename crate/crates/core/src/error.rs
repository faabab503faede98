use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bracket [{lo}, {hi}] does not straddle the root (residuals {g_lo}, {g_hi})")]
    BracketFailure { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("oracle tolerance {tau} exceeds the admissible bound {bound}")]
    Tolerance { tau: f64, bound: f64 },

    #[error("point is not in the capped simplex: {0}")]
    Infeasible(String),

    #[error("inclusion probability {prob} of observed arm {arm} is below the division guard")]
    DivisionGuard { arm: usize, prob: f64 },

    #[error("schedule invariant violated at round {round}: {what}")]
    Schedule { round: usize, what: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}
