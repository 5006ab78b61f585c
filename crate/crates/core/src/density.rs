//! Nearest-neighbor and Parzen-Rosenblatt density estimators.
//!
//! The nearest-neighbor bandwidth `R_k(x)` is the `⌈k⌉`-th smallest value of
//! `2|x − X_i|`, i.e. the width of the smallest window `[x − r/2, x + r/2]`
//! holding `⌈k⌉` sample points. The estimator is
//! `f̂_{n,k}(x) = (n R_k(x))⁻¹ Σ K((x − X_i)/R_k(x))`, and the fixed-bandwidth
//! counterpart is `f̃_{n,h}(x) = (nh)⁻¹ Σ K((x − X_i)/h)`.
//!
//! Expectations in the deviation statistics are replaced by the pointwise mean
//! over replicates, summed in replicate order.

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionModel;
use crate::empirical::{eqf_eval, Sample};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// `1` on `[-1/2, 1/2]`.
    Uniform,
    /// `(3/4)(1 − t²)` on `[-1, 1]`.
    Epanechnikov,
    /// `1 − |t|` on `[-1, 1]`.
    Triangular,
}

/// A compactly supported kernel of bounded variation integrating to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Kernel {
    pub name: &'static str,
    pub kind: KernelKind,
    /// Closed support `[a, b]`.
    pub support: (f64, f64),
    /// `∫ K²`.
    pub l2: f64,
    /// `∫ K`.
    pub total_integral: f64,
    /// Points between which `K` is monotone.
    pub breakpoints: &'static [f64],
}

impl Kernel {
    pub fn uniform() -> Self {
        Kernel {
            name: "uniform",
            kind: KernelKind::Uniform,
            support: (-0.5, 0.5),
            l2: 1.0,
            total_integral: 1.0,
            breakpoints: &[-0.5, 0.5],
        }
    }

    pub fn epanechnikov() -> Self {
        Kernel {
            name: "epanechnikov",
            kind: KernelKind::Epanechnikov,
            support: (-1.0, 1.0),
            l2: 0.6,
            total_integral: 1.0,
            breakpoints: &[-1.0, 0.0, 1.0],
        }
    }

    pub fn triangular() -> Self {
        Kernel {
            name: "triangular",
            kind: KernelKind::Triangular,
            support: (-1.0, 1.0),
            l2: 2.0 / 3.0,
            total_integral: 1.0,
            breakpoints: &[-1.0, 0.0, 1.0],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < self.support.0 || t > self.support.1 {
            return 0.0;
        }
        match self.kind {
            KernelKind::Uniform => 1.0,
            KernelKind::Epanechnikov => 0.75 * (1.0 - t * t),
            KernelKind::Triangular => 1.0 - t.abs(),
        }
    }

    /// `√(∫ K²)`, the limit constant of the deviation statistics.
    pub fn limit_constant(&self) -> f64 {
        self.l2.sqrt()
    }

    /// `Σ K((x − X_i)/scale)` over the sorted sample.
    fn kernel_sum(&self, sorted: &[f64], x: f64, scale: f64) -> f64 {
        // K((x − X)/scale) ≠ 0 requires X ∈ [x − b·scale, x − a·scale]; widen
        // the index window slightly and let `eval` decide membership exactly.
        let (a, b) = self.support;
        let slack = 1e-9 * scale.max(x.abs()).max(1.0);
        let lo = sorted.partition_point(|&v| v < x - b * scale - slack);
        let hi = sorted.partition_point(|&v| v <= x - a * scale + slack);
        sorted[lo..hi]
            .iter()
            .map(|&v| self.eval((x - v) / scale))
            .sum()
    }
}

pub fn builtin_kernels() -> Vec<Kernel> {
    vec![
        Kernel::uniform(),
        Kernel::epanechnikov(),
        Kernel::triangular(),
    ]
}

pub fn kernel_by_name(name: &str) -> Option<Kernel> {
    builtin_kernels().into_iter().find(|k| k.name == name)
}

/// `R_k(x)`: the `⌈k⌉`-th smallest of `2|x − X_i|`.
pub fn nn_radius(sample: &Sample, k: f64, x: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::Range(format!("k = {k} must be positive")));
    }
    let n = sample.n();
    let m = k.ceil() as usize;
    if m > n {
        return Err(Error::Range(format!("⌈k⌉ = {m} exceeds n = {n}")));
    }
    let xs = sample.order_stats();
    // Merge outward from x through the two sorted distance sequences.
    let mut right = xs.partition_point(|&v| v < x);
    let mut left = right;
    let mut dist = 0.0;
    for _ in 0..m {
        let dl = if left > 0 {
            x - xs[left - 1]
        } else {
            f64::INFINITY
        };
        let dr = if right < n {
            xs[right] - x
        } else {
            f64::INFINITY
        };
        if dl <= dr {
            dist = dl;
            left -= 1;
        } else {
            dist = dr;
            right += 1;
        }
    }
    Ok(2.0 * dist)
}

/// `f̂_{n,k}(x) = (n R_k(x))⁻¹ Σ K((x − X_i)/R_k(x))`.
pub fn nn_density(sample: &Sample, kernel: &Kernel, k: f64, x: f64) -> Result<f64> {
    let r = nn_radius(sample, k, x)?;
    nn_density_with_radius(sample, kernel, r, x)
}

fn nn_density_with_radius(sample: &Sample, kernel: &Kernel, r: f64, x: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::DegenerateRadius { x });
    }
    Ok(kernel.kernel_sum(sample.order_stats(), x, r) / (sample.n() as f64 * r))
}

/// `f̃_{n,h}(x) = (nh)⁻¹ Σ K((x − X_i)/h)`.
pub fn pr_density(sample: &Sample, kernel: &Kernel, h: f64, x: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("bandwidth h = {h} must be positive")));
    }
    Ok(kernel.kernel_sum(sample.order_stats(), x, h) / (sample.n() as f64 * h))
}

/// `(Q_n(t1), Q_n(t2))` on the raw sample.
pub fn empirical_interval(sample: &Sample, t1: f64, t2: f64) -> Result<(f64, f64)> {
    if !(0.0 < t1 && t1 < t2 && t2 < 1.0) {
        return Err(Error::Domain(format!(
            "need 0 < t1 < t2 < 1, got t1 = {t1}, t2 = {t2}"
        )));
    }
    Ok((eqf_eval(sample, t1), eqf_eval(sample, t2)))
}

/// `size` equally spaced points over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, size: usize) -> Vec<f64> {
    match size {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..size)
            .map(|j| lo + (hi - lo) * j as f64 / (size - 1) as f64)
            .collect(),
    }
}

/// Grid of `size` points over the intersection of the replicates' empirical
/// intervals `[Q_n(t1), Q_n(t2)]`.
pub fn common_x_grid(replicates: &[Sample], t1: f64, t2: f64, size: usize) -> Result<Vec<f64>> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for s in replicates {
        let (a, b) = empirical_interval(s, t1, t2)?;
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if !(lo < hi) {
        return Err(Error::EmptyRange(format!(
            "empirical intervals do not overlap ([{lo}, {hi}])"
        )));
    }
    Ok(linspace(lo, hi, size))
}

fn check_replicates(replicates: &[Sample]) -> Result<usize> {
    if replicates.len() < 2 {
        return Err(Error::Precondition(
            "Monte Carlo centering needs at least 2 replicates".into(),
        ));
    }
    let n = replicates[0].n();
    if replicates.iter().any(|s| s.n() != n) {
        return Err(Error::Precondition("replicates differ in size".into()));
    }
    Ok(n)
}

/// Per-replicate `sup_x w(x) |est_r(x) − mean_r est_r(x)|`.
fn centered_sup(
    replicates: &[Sample],
    x_grid: &[f64],
    estimate: impl Fn(&Sample, f64) -> Result<f64>,
    weight: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    let values = replicates
        .iter()
        .map(|s| {
            x_grid
                .iter()
                .map(|&x| estimate(s, x))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let r = replicates.len() as f64;
    let mut mean = vec![0.0; x_grid.len()];
    for row in &values {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= r);
    let weights: Vec<f64> = x_grid.iter().map(|&x| weight(x)).collect();
    Ok(values
        .iter()
        .map(|row| {
            row.iter()
                .zip(&mean)
                .zip(&weights)
                .map(|((v, m), w)| w * (v - m).abs())
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Per-replicate `sup_x √k |f̂_{n,k}(x) − Ê f̂_{n,k}(x)| / √(2 f²(x) log(n/k))`,
/// `Ê` being the across-replicate mean.
pub fn nn_statistic(
    replicates: &[Sample],
    model: &DistributionModel,
    kernel: &Kernel,
    k: f64,
    x_grid: &[f64],
) -> Result<Vec<f64>> {
    let n = check_replicates(replicates)?;
    let ratio = n as f64 / k;
    if !(ratio > 1.0) {
        return Err(Error::Range(format!("k = {k} must be below n = {n}")));
    }
    let log_term = ratio.ln();
    centered_sup(
        replicates,
        x_grid,
        |s, x| nn_density(s, kernel, k, x),
        |x| {
            let f = model.density(x);
            k.sqrt() / (2.0 * f * f * log_term).sqrt()
        },
    )
}

/// Per-replicate `sup_x √(nh) |f̃_{n,h}(x) − Ê f̃_{n,h}(x)| / √(2 f(x) log(1/h))`.
pub fn pr_statistic(
    replicates: &[Sample],
    model: &DistributionModel,
    kernel: &Kernel,
    h: f64,
    x_grid: &[f64],
) -> Result<Vec<f64>> {
    let n = check_replicates(replicates)?;
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Domain(format!(
            "bandwidth h = {h} must lie in (0, 1)"
        )));
    }
    let log_term = (1.0 / h).ln();
    let nh = n as f64 * h;
    centered_sup(
        replicates,
        x_grid,
        |s, x| pr_density(s, kernel, h, x),
        |x| nh.sqrt() / (2.0 * model.density(x) * log_term).sqrt(),
    )
}

/// `sup_{x, k} |R_k(x) − k/(n f(x))|` over the given grids.
pub fn radius_gap(
    sample: &Sample,
    model: &DistributionModel,
    k_grid: &[f64],
    x_grid: &[f64],
) -> Result<f64> {
    let nf = sample.n() as f64;
    let mut sup = 0.0f64;
    for &k in k_grid {
        for &x in x_grid {
            let r = nn_radius(sample, k, x)?;
            sup = sup.max((r - k / (nf * model.density(x))).abs());
        }
    }
    Ok(sup)
}
