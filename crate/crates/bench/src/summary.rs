//! Checkpoint summaries of regret runs.
//!
//! Rows of one configuration share a run-id prefix (everything before the
//! trailing `-s<seed>`). For each configuration and checkpoint `T_c` (powers
//! of two from `2¹⁰` up to the horizon) the summary reports the median over
//! seeds of `R(T_c)`, `R(T_c)/√T_c` and `R(T_c)/ln T_c`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use semibandit::record::RunRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config: String,
    pub regime: String,
    pub algo: String,
    #[serde(rename = "K")]
    pub arms: usize,
    pub m: usize,
    pub d: usize,
    #[serde(rename = "T")]
    pub checkpoint: usize,
    pub runs: usize,
    pub median_regret: f64,
    pub median_regret_over_sqrt_t: f64,
    pub median_regret_over_ln_t: f64,
}

impl SummaryRow {
    pub const HEADER: [&'static str; 11] = [
        "config",
        "regime",
        "algo",
        "K",
        "m",
        "d",
        "T",
        "runs",
        "median_regret",
        "median_regret_over_sqrt_t",
        "median_regret_over_ln_t",
    ];
}

/// Powers of two in `[2¹⁰, horizon]`; the horizon itself when it is below `2¹⁰`.
pub fn checkpoints(horizon: usize) -> Vec<usize> {
    let points: Vec<usize> = (10..usize::BITS).map(|p| 1usize << p).take_while(|&c| c <= horizon).collect();
    if points.is_empty() {
        vec![horizon]
    } else {
        points
    }
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => s[n / 2],
        _ => 0.5 * (s[n / 2 - 1] + s[n / 2]),
    }
}

/// `run_id` without its seed suffix.
pub fn config_of(run_id: &str) -> &str {
    match run_id.rfind("-s") {
        Some(i) if run_id[i + 2..].chars().all(|c| c.is_ascii_digit()) && i + 2 < run_id.len() => &run_id[..i],
        _ => run_id,
    }
}

pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    // config → run → (t → cumulative regret), plus a representative row.
    let mut groups: BTreeMap<&str, (BTreeMap<&str, BTreeMap<usize, f64>>, &RunRecord)> = BTreeMap::new();
    for r in records {
        let entry = groups.entry(config_of(&r.run_id)).or_insert_with(|| (BTreeMap::new(), r));
        entry.0.entry(r.run_id.as_str()).or_default().insert(r.t, r.cum_regret);
    }
    let mut out = Vec::new();
    for (config, (runs, first)) in groups {
        let horizon = runs.values().filter_map(|r| r.keys().next_back().copied()).max().unwrap_or(0);
        for c in checkpoints(horizon) {
            let values: Vec<f64> = runs.values().filter_map(|r| r.get(&c).copied()).collect();
            if values.is_empty() {
                continue;
            }
            let med = median(&values);
            out.push(SummaryRow {
                config: config.to_string(),
                regime: first.regime.clone(),
                algo: first.algo.clone(),
                arms: first.arms,
                m: first.m,
                d: first.d,
                checkpoint: c,
                runs: values.len(),
                median_regret: med,
                median_regret_over_sqrt_t: median(&values.iter().map(|v| v / (c as f64).sqrt()).collect::<Vec<_>>()),
                median_regret_over_ln_t: median(&values.iter().map(|v| v / (c as f64).ln()).collect::<Vec<_>>()),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(run_id: &str, t: usize, regret: f64) -> RunRecord {
        RunRecord {
            run_id: run_id.into(),
            seed: 0,
            t,
            regime: "stoch".into(),
            algo: "ftrl".into(),
            arms: 4,
            m: 2,
            d: 1,
            action: "1100".into(),
            round_loss: 0.0,
            cum_regret: regret,
            eta_t: 0.1,
            gamma_t: 0.1,
            resamples: 3,
            entropy_t: 1.0,
            wall_ns: 0,
        }
    }

    #[test]
    fn checkpoint_grid() {
        assert_eq!(checkpoints(4096), vec![1024, 2048, 4096]);
        assert_eq!(checkpoints(5000), vec![1024, 2048, 4096]);
        assert_eq!(checkpoints(100), vec![100]);
    }

    #[test]
    fn run_id_prefix() {
        assert_eq!(config_of("ftrl-stoch-C0-K8-m2-d3-T4096-s17"), "ftrl-stoch-C0-K8-m2-d3-T4096");
        assert_eq!(config_of("plain"), "plain");
    }

    #[test]
    fn medians_over_seeds() {
        let mut rows = Vec::new();
        for (s, scale) in [(0, 1.0), (1, 3.0), (2, 2.0)] {
            for t in 1..=1024 {
                rows.push(row(&format!("cfg-s{s}"), t, scale * t as f64 / 1024.0));
            }
        }
        let sum = summarize(&rows);
        assert_eq!(sum.len(), 1);
        assert_eq!(sum[0].runs, 3);
        assert_eq!(sum[0].median_regret, 2.0);
        assert!((sum[0].median_regret_over_sqrt_t - 2.0 / 32.0).abs() < 1e-15);
        assert_eq!(median(&[1.0, 4.0]), 2.5);
    }
}
