//! Test oracles that share no code with the library's taut-string solver.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn energy(nodes: &[f64], v: &[f64]) -> f64 {
    nodes
        .windows(2)
        .zip(v.windows(2))
        .map(|(x, y)| (y[1] - y[0]).powi(2) / (x[1] - x[0]))
        .sum()
}

/// Minimum Dirichlet energy over node values in the box `[lower, upper]` with
/// the value at node `zero` fixed to 0, by accelerated projected gradient
/// (FISTA). Returns `None` when the box excludes 0 at the pin.
pub fn qp_min_energy(
    nodes: &[f64],
    lower: &[f64],
    upper: &[f64],
    zero: usize,
) -> Option<(f64, Vec<f64>)> {
    if lower[zero] > 0.0 || upper[zero] < 0.0 {
        return None;
    }
    let m = nodes.len();
    let dmin = nodes
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let step = dmin / 8.0;
    let project = |v: &mut [f64]| {
        for i in 0..m {
            v[i] = v[i].clamp(lower[i], upper[i]);
        }
        v[zero] = 0.0;
    };
    let mut x: Vec<f64> = (0..m).map(|i| 0.5 * (lower[i] + upper[i])).collect();
    project(&mut x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut grad = vec![0.0; m];
    for _ in 0..40_000 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..m - 1 {
            let d = 2.0 * (y[i + 1] - y[i]) / (nodes[i + 1] - nodes[i]);
            grad[i] -= d;
            grad[i + 1] += d;
        }
        let mut next: Vec<f64> = (0..m).map(|i| y[i] - step * grad[i]).collect();
        project(&mut next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for i in 0..m {
            y[i] = next[i] + beta * (next[i] - x[i]);
        }
        x = next;
        t = t_next;
    }
    Some((energy(nodes, &x), x))
}

/// Grid-restricted sup-norm distance to the Strassen ball by bisection over
/// the tube half-width with the QP oracle as feasibility test.
pub fn qp_distance(nodes: &[f64], phi: &[f64], zero: usize) -> f64 {
    let feasible = |eps: f64| {
        let lo: Vec<f64> = phi.iter().map(|v| v - eps).collect();
        let hi: Vec<f64> = phi.iter().map(|v| v + eps).collect();
        qp_min_energy(nodes, &lo, &hi, zero).is_some_and(|(e, _)| e <= 1.0)
    };
    if energy(nodes, phi) <= 1.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `m` equally spaced nodes on `[-1, 1]` (odd `m`).
pub fn nodes(m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64)
        .collect()
}

/// Random node values in `[-a, a]` vanishing at the middle node.
pub fn random_field(seed: u64, m: usize, a: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(-a..a)).collect();
    v[m / 2] = 0.0;
    v
}

/// Exact `sup_t |α_n(t) + β_n(t)|` evaluated on `points` equally spaced `t`
/// in `[0, 1]`, directly from the definitions.
pub fn bk_grid(sorted: &[f64], points: usize) -> f64 {
    let n = sorted.len();
    let nf = n as f64;
    let mut best = 0.0f64;
    for j in 0..=points {
        let t = j as f64 / points as f64;
        let edf = sorted.partition_point(|&v| v <= t) as f64 / nf;
        let q = if t <= 0.0 {
            0.0
        } else {
            let mut i = (nf * t).ceil() as usize;
            i = i.clamp(1, n);
            while i > 1 && (i - 1) as f64 >= nf * t {
                i -= 1;
            }
            sorted[i - 1]
        };
        best = best.max((nf.sqrt() * (edf - t) + nf.sqrt() * (q - t)).abs());
    }
    best
}
