//! Independent reference computations used by the integration and
//! acceptance tests. None of these call into the library's solvers.

#![allow(dead_code)]

/// Euclidean projection of `y` onto `{a ∈ [0,1]^K : Σ a = m}`.
///
/// `s(τ) = Σ clamp(y_k − τ, 0, 1)` is piecewise linear and nonincreasing with
/// kinks at `y_k − 1` and `y_k`; the root is located on the sorted kinks and
/// solved linearly on its segment.
pub fn euclidean_capped_projection(y: &[f64], m: f64) -> Vec<f64> {
    let s = |tau: f64| y.iter().map(|&v| (v - tau).clamp(0.0, 1.0)).sum::<f64>();
    let mut kinks: Vec<f64> = y.iter().flat_map(|&v| [v - 1.0, v]).collect();
    kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // s(kinks[0]) = K ≥ m, s(kinks.last) = 0 ≤ m.
    let mut i = 0;
    while i + 1 < kinks.len() && s(kinks[i + 1]) >= m {
        i += 1;
    }
    let (t0, t1) = (kinks[i], kinks[(i + 1).min(kinks.len() - 1)]);
    let (s0, s1) = (s(t0), s(t1));
    let tau = if s0 == s1 { t0 } else { t0 + (s0 - m) * (t1 - t0) / (s0 - s1) };
    y.iter().map(|&v| (v - tau).clamp(0.0, 1.0)).collect()
}

/// `argmin Σ c_k a_k + a_k ln a_k − a_k` over the capped simplex by iterative
/// water-filling: softmax the free arms to the remaining mass, cap every arm
/// exceeding one, repeat.
pub fn capped_softmax(c: &[f64], m: usize) -> Vec<f64> {
    let k = c.len();
    let mut capped = vec![false; k];
    loop {
        let free: Vec<usize> = (0..k).filter(|&i| !capped[i]).collect();
        let mass = m as f64 - (k - free.len()) as f64;
        let top = free.iter().map(|&i| -c[i]).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = free.iter().map(|&i| (-c[i] - top).exp()).sum();
        let mut a = vec![1.0; k];
        for &i in &free {
            a[i] = mass * (-c[i] - top).exp() / z;
        }
        let over: Vec<usize> = free.iter().copied().filter(|&i| a[i] > 1.0).collect();
        if over.is_empty() {
            return a;
        }
        for i in over {
            capped[i] = true;
        }
    }
}

/// Euclidean projection onto `{a ∈ [0,1]^K : Σ a ≤ m}` by enumerating the
/// status (at 0, at 1, free) of every coordinate and whether the sum
/// constraint is active, keeping the closest feasible candidate. `K ≤ 8`.
pub fn brute_force_leq_projection(y: &[f64], m: f64) -> Vec<f64> {
    let k = y.len();
    assert!(k <= 8);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |a: Vec<f64>| {
        let feasible = a.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)) && a.iter().sum::<f64>() <= m + 1e-12;
        if feasible {
            let d: f64 = a.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, a));
            }
        }
    };
    for code in 0..3usize.pow(k as u32) {
        let status: Vec<usize> = (0..k).map(|i| (code / 3usize.pow(i as u32)) % 3).collect();
        let fixed: f64 = status.iter().filter(|&&s| s == 1).count() as f64;
        let free: Vec<usize> = (0..k).filter(|&i| status[i] == 2).collect();
        let base = |tau: f64| -> Vec<f64> {
            (0..k)
                .map(|i| match status[i] {
                    0 => 0.0,
                    1 => 1.0,
                    _ => y[i] - tau,
                })
                .collect()
        };
        consider(base(0.0));
        if !free.is_empty() {
            let tau = (free.iter().map(|&i| y[i]).sum::<f64>() + fixed - m) / free.len() as f64;
            if tau >= 0.0 {
                consider(base(tau));
            }
        }
    }
    best.expect("zero vector is always feasible").1
}

/// Smallest total score over subsets of size exactly `m` (or at most `m`).
pub fn brute_force_best_subset(scores: &[f64], m: usize, exact: bool) -> f64 {
    let k = scores.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << k) {
        let size = mask.count_ones() as usize;
        if size == m || (!exact && size < m) {
            let total: f64 = (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| scores[i]).sum();
            best = best.min(total);
        }
    }
    best
}

/// Symmetric `d × d` inverse by Gauss–Jordan elimination, row-major.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&p, &q| m[p][col].abs().partial_cmp(&m[q][col].abs()).unwrap()).unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                let pivot_row = m[col].clone();
                for (v, pv) in m[r].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Strictly interior point of the capped simplex: half the Euclidean
/// projection of a random vector, half the uniform point.
pub fn interior_point<R: rand::Rng>(rng: &mut R, k: usize, m: usize) -> Vec<f64> {
    let y: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..2.0)).collect();
    let p = euclidean_capped_projection(&y, m as f64);
    p.iter().map(|&v| 0.5 * v + 0.5 * m as f64 / k as f64).collect()
}
