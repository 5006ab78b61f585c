//! Exact suprema of `|β_n(t + hs) − β_n(t)|` over continuous `s`.
//!
//! On the piece `((i−1)/n, i/n]` the uniform quantile process is
//! `β_n(u) = √n (U_(i) − u)`, decreasing from `A_i = √n (U_(i) − (i−1)/n)`
//! (a left limit) to `B_i = √n (U_(i) − i/n)`, and `β_n(0) = 0`. The sup and
//! inf of `β_n` over a window therefore come from its two partial end pieces
//! and the `A`/`B` extrema over the full pieces in between. Anchors are
//! visited in increasing order, so both ends of the full-piece range only move
//! right and monotone deques give the extrema in amortized constant time.

use std::collections::VecDeque;

use crate::empirical::{quantile_index, Sample};

/// Sliding-window maximum (or minimum) over index ranges whose ends never
/// move left.
struct Monotone<'a> {
    vals: &'a [f64],
    max: bool,
    dq: VecDeque<usize>,
    next: usize,
}

impl<'a> Monotone<'a> {
    fn new(vals: &'a [f64], max: bool) -> Self {
        Monotone {
            vals,
            max,
            dq: VecDeque::new(),
            next: 0,
        }
    }

    /// Extremum over `vals[l..=r]`, or `None` when `l > r`.
    fn query(&mut self, l: usize, r: usize) -> Option<f64> {
        while self.next <= r && self.next < self.vals.len() {
            let v = self.vals[self.next];
            while let Some(&b) = self.dq.back() {
                let w = self.vals[b];
                if (self.max && w <= v) || (!self.max && w >= v) {
                    self.dq.pop_back();
                } else {
                    break;
                }
            }
            self.dq.push_back(self.next);
            self.next += 1;
        }
        while let Some(&f) = self.dq.front() {
            if f < l {
                self.dq.pop_front();
            } else {
                break;
            }
        }
        if l > r {
            return None;
        }
        self.dq.front().map(|&i| self.vals[i])
    }
}

pub(crate) struct BetaPieces<'a> {
    u: &'a [f64],
    a: Vec<f64>,
    b: Vec<f64>,
    root_n: f64,
}

impl<'a> BetaPieces<'a> {
    pub(crate) fn new(sample: &'a Sample) -> Self {
        let u = sample.order_stats();
        let n = u.len();
        let nf = n as f64;
        let root_n = nf.sqrt();
        let a = (1..=n)
            .map(|i| root_n * (u[i - 1] - (i - 1) as f64 / nf))
            .collect();
        let b = (1..=n)
            .map(|i| root_n * (u[i - 1] - i as f64 / nf))
            .collect();
        BetaPieces { u, a, b, root_n }
    }

    fn n(&self) -> usize {
        self.u.len()
    }

    /// `β_n(t)` for `0 ≤ t ≤ 1`.
    pub(crate) fn beta(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            self.root_n * (self.u[quantile_index(self.n(), t.min(1.0)) - 1] - t)
        }
    }

    /// `sup_t sup_{s} |β_n(t + hs) − β_n(t)|` for `s ∈ [s_lo, s_hi]`, over the
    /// sorted anchors `ts`; windows are clipped to `[0, 1]`.
    pub(crate) fn sup_increment(&self, ts: &[f64], h: f64, s_lo: f64, s_hi: f64) -> f64 {
        let n = self.n();
        let mut amax = Monotone::new(&self.a, true);
        let mut bmin = Monotone::new(&self.b, false);
        let mut best = 0.0f64;
        for &t in ts {
            let lo = (t + h * s_lo).max(0.0);
            let hi = (t + h * s_hi).min(1.0);
            let base = self.beta(t);
            let (mut sup, mut inf) = (f64::NEG_INFINITY, f64::INFINITY);
            if hi <= 0.0 {
                sup = 0.0;
                inf = 0.0;
            } else {
                let ia = if lo <= 0.0 {
                    sup = 0.0;
                    inf = 0.0;
                    1
                } else {
                    quantile_index(n, lo)
                };
                let ib = quantile_index(n, hi);
                let left = lo.max(0.0);
                if ia == ib {
                    sup = sup.max(self.root_n * (self.u[ia - 1] - left));
                    inf = inf.min(self.root_n * (self.u[ia - 1] - hi));
                } else {
                    sup = sup.max(self.root_n * (self.u[ia - 1] - left));
                    inf = inf.min(self.b[ia - 1]);
                    sup = sup.max(self.a[ib - 1]);
                    inf = inf.min(self.root_n * (self.u[ib - 1] - hi));
                }
                // Full pieces ia+1..=ib-1 are 0-based ia..=ib-2.
                if ib >= ia + 2 {
                    if let Some(v) = amax.query(ia, ib - 2) {
                        sup = sup.max(v);
                    }
                    if let Some(v) = bmin.query(ia, ib - 2) {
                        inf = inf.min(v);
                    }
                }
            }
            best = best.max(sup - base).max(base - inf);
        }
        best
    }
}

/// `t0 + j·step` for `t0 ≤ t ≤ t1`, then `t1`.
pub(crate) fn stride_grid(t0: f64, t1: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut j = 0usize;
    loop {
        let t = t0 + j as f64 * step;
        if t >= t1 {
            break;
        }
        out.push(t);
        j += 1;
    }
    out.push(t1);
    out
}

/// Sorted union of `grid` and the jump points `j/n` inside `[t0, t1]`.
pub(crate) fn with_jumps(grid: &[f64], n: usize, t0: f64, t1: f64) -> Vec<f64> {
    let nf = n as f64;
    let first = (t0 * nf).ceil() as usize;
    let last = ((t1 * nf).floor() as usize).min(n);
    let jumps = (first..=last)
        .map(|j| j as f64 / nf)
        .filter(|&t| t >= t0 && t <= t1);
    let mut out: Vec<f64> = grid.iter().copied().chain(jumps).collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}
