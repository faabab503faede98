//! Per-round log rows shared by the engines and the harness.

use serde::{Deserialize, Serialize};

/// One round of a regret run. Column names are the CSV header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub seed: u64,
    pub t: usize,
    pub regime: String,
    pub algo: String,
    #[serde(rename = "K")]
    pub arms: usize,
    pub m: usize,
    pub d: usize,
    /// Played action as a `0/1` bitstring.
    pub action: String,
    pub round_loss: f64,
    pub cum_regret: f64,
    pub eta_t: f64,
    pub gamma_t: f64,
    #[serde(rename = "M_t")]
    pub resamples: usize,
    pub entropy_t: f64,
    pub wall_ns: u64,
}

impl RunRecord {
    pub const HEADER: [&'static str; 16] = [
        "run_id", "seed", "t", "regime", "algo", "K", "m", "d", "action", "round_loss", "cum_regret", "eta_t",
        "gamma_t", "M_t", "entropy_t", "wall_ns",
    ];
}
