//! Core domain types: actions, mean actions, contexts and configuration.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on the coordinate sum of a [`MeanAction`].
pub const SUM_TOLERANCE: f64 = 1e-10;

/// Binary incidence vector over the base arms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionVector(Vec<bool>);

impl ActionVector {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        ActionVector(bits)
    }

    pub fn zeros(arms: usize) -> Self {
        ActionVector(vec![false; arms])
    }

    /// Vertex supported on the given arm indices.
    pub fn from_support(arms: usize, support: &[usize]) -> Self {
        let mut bits = vec![false; arms];
        for &k in support {
            bits[k] = true;
        }
        ActionVector(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> bool {
        self.0[k]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn popcount(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Indices of the selected arms, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn dot(&self, values: &[f64]) -> f64 {
        self.support().map(|k| values[k]).sum()
    }

    /// Checks the cardinality invariant for `m`-sets (`exact`) or `≤ m` sets.
    pub fn is_valid(&self, m: usize, exact: bool) -> bool {
        let p = self.popcount();
        if exact {
            p == m
        } else {
            p <= m
        }
    }

    /// `0`/`1` string, arm 1 first.
    pub fn to_bitstring(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn parse_bitstring(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(ActionVector)
    }
}

impl fmt::Display for ActionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

/// A point of the capped simplex `{a ∈ [0,1]^K : Σ a_k = m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanAction(Vec<f64>);

impl MeanAction {
    /// Wraps coordinates without validation; engines use this for freshly
    /// projected iterates.
    pub fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        MeanAction(coords)
    }

    /// Validates `0 ≤ a_k ≤ 1` and `|Σ a_k − m| ≤ tol`.
    pub fn new(coords: Vec<f64>, m: usize, tol: f64) -> Result<Self> {
        check_capped_simplex(&coords, m, tol)?;
        Ok(MeanAction(coords))
    }

    pub fn uniform(arms: usize, m: usize) -> Self {
        MeanAction(vec![m as f64 / arms as f64; arms])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Shannon entropy `−Σ a ln a` with `0 ln 0 = 0`, in nats.
    pub fn entropy(&self) -> f64 {
        entropy(&self.0)
    }

    pub fn distance(&self, other: &MeanAction) -> f64 {
        l2_distance(&self.0, &other.0)
    }
}

impl std::ops::Index<usize> for MeanAction {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

pub fn entropy(a: &[f64]) -> f64 {
    a.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) fn check_capped_simplex(coords: &[f64], m: usize, tol: f64) -> Result<()> {
    if let Some((k, &x)) = coords.iter().enumerate().find(|(_, &x)| !(-tol..=1.0 + tol).contains(&x)) {
        return Err(Error::Infeasible(format!("coordinate {k} = {x} outside [0, 1]")));
    }
    let sum: f64 = coords.iter().sum();
    if (sum - m as f64).abs() > tol {
        return Err(Error::Infeasible(format!("coordinate sum {sum} differs from m = {m}")));
    }
    Ok(())
}

/// Observed context, `‖x‖₂ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Context(Vec<f64>);

impl Context {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > 1.0 + 1e-12 {
            return Err(Error::Domain { what: "context norm", value: norm });
        }
        Ok(Context(x))
    }

    pub(crate) fn new_unchecked(x: Vec<f64>) -> Self {
        Context(x)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

fn default_eps() -> f64 {
    1e-9
}

fn default_true() -> bool {
    true
}

/// Problem sizes and tolerances shared by engines and harness.
///
/// Serialized field names follow the usual notation (`K`, `m`, `T`, `d`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Number of base arms `K`, slack arms included.
    #[serde(rename = "K")]
    pub arms: usize,
    /// Subset size `m`.
    pub m: usize,
    /// Horizon `T`.
    #[serde(rename = "T")]
    pub horizon: usize,
    /// Context dimension `d`.
    #[serde(rename = "d")]
    pub dim: usize,
    /// Smallest eigenvalue of the context covariance, supplied to the learner.
    pub lambda_min: f64,
    #[serde(default = "default_eps")]
    pub eps_proj: f64,
    #[serde(default = "default_true")]
    pub exact_m: bool,
    #[serde(default)]
    pub seed: u64,
    /// Trailing arms added by [`make_exact`]; they carry zero loss.
    #[serde(default)]
    pub slack_arms: usize,
}

impl ProblemConfig {
    pub fn new(arms: usize, m: usize, horizon: usize, dim: usize, lambda_min: f64) -> Self {
        ProblemConfig {
            arms,
            m,
            horizon,
            dim,
            lambda_min,
            eps_proj: default_eps(),
            exact_m: true,
            seed: 0,
            slack_arms: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.m < 1 || self.m > self.arms {
            return fail(format!("need 1 ≤ m ≤ K, got m = {}, K = {}", self.m, self.arms));
        }
        if self.horizon < 1 {
            return fail("horizon T must be at least 1".into());
        }
        if self.dim < 1 {
            return fail("context dimension d must be at least 1".into());
        }
        if !(self.lambda_min > 0.0 && self.lambda_min.is_finite()) {
            return fail(format!("lambda_min must be positive, got {}", self.lambda_min));
        }
        if !(self.eps_proj > 0.0 && self.eps_proj.is_finite()) {
            return fail(format!("eps_proj must be positive, got {}", self.eps_proj));
        }
        if self.slack_arms > 0 && self.slack_arms >= self.arms {
            return fail("slack arms must leave at least one real arm".into());
        }
        Ok(())
    }

    /// Arms that are not slack.
    pub fn real_arms(&self) -> usize {
        self.arms - self.slack_arms
    }

    pub fn is_slack(&self, k: usize) -> bool {
        k >= self.real_arms()
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

/// Embeds a `Σ ≤ m` instance into an exact-`m` one by appending `m` slack arms
/// with identically zero loss. Exact configurations are returned unchanged.
pub fn make_exact(config: &ProblemConfig) -> ProblemConfig {
    if config.exact_m {
        return config.clone();
    }
    ProblemConfig {
        arms: config.arms + config.m,
        exact_m: true,
        slack_arms: config.slack_arms + config.m,
        ..config.clone()
    }
}
