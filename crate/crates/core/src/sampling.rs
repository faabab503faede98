//! Vertex decomposition of mean actions and action sampling.
//!
//! A point `Ā` of the capped simplex is peeled into at most `K` weighted
//! `m`-set vertices. At each step the residual `r` lies in `s · conv(𝒜)`,
//! where `s` is the unassigned mass; the vertex on the top-`m` residual
//! coordinates receives the largest weight `w` keeping `r − w·v` inside
//! `(s − w) · conv(𝒜)`:
//!
//! ```text
//! w = min( min_{k ∈ v} r_k ,  s − max_{k ∉ v} r_k ).
//! ```
//!
//! Each step either empties a selected coordinate or makes an unselected one
//! tight (`r_k = s`), and both states persist, so the atom count is at most `K`.

use rand::Rng;

use crate::model::{check_capped_simplex, ActionVector, MeanAction};
use crate::{Error, Result};

/// Residual coordinates within this distance of `0` or `s` are snapped.
const SNAP: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    atoms: Vec<(ActionVector, f64)>,
}

impl Decomposition {
    pub fn atoms(&self) -> &[(ActionVector, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// `Σ_i w_i v_i`.
    pub fn mean(&self) -> Vec<f64> {
        let arms = self.atoms.first().map_or(0, |(v, _)| v.len());
        let mut out = vec![0.0; arms];
        for (v, w) in &self.atoms {
            for k in v.support() {
                out[k] += w;
            }
        }
        out
    }
}

/// Greedy vertex peeling of an exact-`m` mean action.
pub fn decompose(abar: &MeanAction, m: usize) -> Result<Decomposition> {
    let arms = abar.len();
    check_capped_simplex(abar.coords(), m, 1e-9)?;
    if m == 0 || m > arms {
        return Err(Error::Infeasible(format!("m = {m} with K = {arms}")));
    }
    let mut r: Vec<f64> = abar.coords().iter().map(|&x| x.clamp(0.0, 1.0)).collect();
    let mut mass = 1.0f64;
    let mut order: Vec<usize> = (0..arms).collect();
    let mut atoms = Vec::new();

    while mass > SNAP && atoms.len() < arms {
        for x in r.iter_mut() {
            if *x < SNAP {
                *x = 0.0;
            } else if *x > mass - SNAP {
                *x = mass;
            }
        }
        // Descending residual, ties by index.
        order.sort_by(|&a, &b| r[b].partial_cmp(&r[a]).expect("finite").then(a.cmp(&b)));
        let (inside, outside) = order.split_at(m);
        let min_in = inside.iter().map(|&k| r[k]).fold(f64::INFINITY, f64::min);
        let max_out = outside.iter().map(|&k| r[k]).fold(0.0, f64::max);
        let mut w = min_in.min(mass - max_out).max(0.0);
        if w <= 0.0 || atoms.len() + 1 == arms || mass - w < SNAP {
            w = mass;
        }
        for &k in inside {
            r[k] -= w;
        }
        mass -= w;
        atoms.push((ActionVector::from_support(arms, inside), w));
    }
    // Fold the rounding remainder into the heaviest atom so weights sum to 1.
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    if let Some(best) = atoms.iter_mut().max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite")) {
        best.1 += 1.0 - total;
    }
    Ok(Decomposition { atoms })
}

/// Draws from the vertex decomposition of a mean action without
/// materializing it: peels atoms in the same order as [`decompose`] and stops
/// at the one holding the uniform draw. Buffers are reused across calls.
#[derive(Debug, Clone, Default)]
pub struct LazySampler {
    r: Vec<f64>,
    order: Vec<usize>,
}

impl LazySampler {
    pub fn new() -> Self {
        Self::default()
    }

    /// `abar` must already be feasible; it is not rechecked.
    pub fn sample<R: Rng + ?Sized>(&mut self, abar: &[f64], m: usize, rng: &mut R) -> ActionVector {
        let arms = abar.len();
        let mut u = rng.random::<f64>();
        self.r.clear();
        self.r.extend(abar.iter().map(|&x| x.clamp(0.0, 1.0)));
        self.order.clear();
        self.order.extend(0..arms);
        let (r, order) = (&mut self.r, &mut self.order);
        let mut mass = 1.0f64;
        let mut atoms = 0;
        loop {
            for x in r.iter_mut() {
                if *x < SNAP {
                    *x = 0.0;
                } else if *x > mass - SNAP {
                    *x = mass;
                }
            }
            order.sort_by(|&a, &b| r[b].partial_cmp(&r[a]).expect("finite").then(a.cmp(&b)));
            let (inside, outside) = order.split_at(m);
            let min_in = inside.iter().map(|&k| r[k]).fold(f64::INFINITY, f64::min);
            let max_out = outside.iter().map(|&k| r[k]).fold(0.0, f64::max);
            let mut w = min_in.min(mass - max_out).max(0.0);
            atoms += 1;
            let last = w <= 0.0 || atoms == arms || mass - w < SNAP;
            if last {
                w = mass;
            }
            if u < w || last || mass - w <= SNAP {
                return ActionVector::from_support(arms, inside);
            }
            u -= w;
            for &k in inside {
                r[k] -= w;
            }
            mass -= w;
        }
    }
}

/// Draws an atom with probability proportional to its weight.
pub fn sample_action<R: Rng + ?Sized>(decomp: &Decomposition, rng: &mut R) -> ActionVector {
    let total = decomp.total_weight();
    let mut u = rng.random::<f64>() * total;
    for (v, w) in &decomp.atoms {
        if u < *w {
            return v.clone();
        }
        u -= w;
    }
    decomp.atoms.last().expect("nonempty decomposition").0.clone()
}

/// With probability `gamma` a uniform element of `exploration`, otherwise a
/// draw from `decomp`.
pub fn mix_exploration<R: Rng + ?Sized>(
    decomp: &Decomposition,
    gamma: f64,
    exploration: &[ActionVector],
    rng: &mut R,
) -> ActionVector {
    if gamma > 0.0 && !exploration.is_empty() && rng.random::<f64>() < gamma {
        exploration[rng.random_range(0..exploration.len())].clone()
    } else {
        sample_action(decomp, rng)
    }
}

/// Exploration set covering every real arm.
///
/// With at least `m − 1` slack arms (the embedded `Σ ≤ m` case) these are the
/// real-arm singletons padded with the first `m − 1` slack arms. Without slack
/// arms, the `K` cyclic windows `{k, …, k + m − 1 mod K}` are used.
pub fn exploration_set(arms: usize, m: usize, slack_arms: usize) -> Vec<ActionVector> {
    let real = arms - slack_arms;
    if slack_arms + 1 >= m {
        (0..real)
            .map(|k| {
                let mut support: Vec<usize> = (real..real + m - 1).collect();
                support.push(k);
                ActionVector::from_support(arms, &support)
            })
            .collect()
    } else {
        (0..arms)
            .map(|k| {
                let support: Vec<usize> = (0..m).map(|j| (k + j) % arms).collect();
                ActionVector::from_support(arms, &support)
            })
            .collect()
    }
}
