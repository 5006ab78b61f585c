//! Samples, empirical distribution and quantile functions, and the processes
//! built from them.
//!
//! For a sample `X_1..X_n` with order statistics `X_(1) ≤ … ≤ X_(n)`:
//!
//! - `F_n(x) = #{X_i ≤ x}/n` (right-continuous),
//! - `Q_n(t) = X_(⌈nt⌉)` for `0 < t ≤ 1`, `Q_n(t) = 0` for `t ≤ 0` and
//!   `Q_n(t) = X_(n)` for `t ≥ 1` (left-continuous),
//! - `α_n(t) = √n (F_n(t) − t)`, `β_n(t) = √n (Q_n(t) − t)` on uniform samples,
//! - `b_n(t) = √n (Q_n(t) − Q(t)) / q(t)` on samples from a model.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{iterated_log, DistributionModel};
use crate::strassen::GridFunction;
use crate::{increment_scale, Error, Result};

/// A batch of draws with cached order statistics. Read-only after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    order_stats: Vec<f64>,
    source_model: Option<String>,
    seed: Option<u64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_provenance(values, None, None)
    }

    pub fn with_provenance(
        values: Vec<f64>,
        source_model: Option<String>,
        seed: Option<u64>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("a sample needs n ≥ 1 values".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "non-finite sample value {bad}"
            )));
        }
        let mut order_stats = values.clone();
        order_stats.sort_by(f64::total_cmp);
        Ok(Sample {
            values,
            order_stats,
            source_model,
            seed,
        })
    }

    /// Draws `n` values from `model` by inverse transform of ChaCha8 open-interval
    /// uniforms. The same `seed` with the uniform model yields the underlying
    /// uniforms, in the same order.
    pub fn draw(model: &DistributionModel, n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                model.quantile(u)
            })
            .collect();
        Self::with_provenance(values, Some(model.name.to_string()), Some(seed))
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Ascending order statistics; `order_stats()[i - 1]` is `X_(i)`.
    pub fn order_stats(&self) -> &[f64] {
        &self.order_stats
    }

    pub fn source_model(&self) -> Option<&str> {
        self.source_model.as_deref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Writes the plain-text format: `# key = value` header lines for `n`,
    /// `model` and `seed`, then one value per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# n = {}", self.n())?;
        if let Some(m) = &self.source_model {
            writeln!(w, "# model = {m}")?;
        }
        if let Some(s) = self.seed {
            writeln!(w, "# seed = {s}")?;
        }
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut values = Vec::new();
        let mut declared_n = None;
        let mut model = None;
        let mut seed = None;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                if let Some((key, value)) = header.split_once('=') {
                    let value = value.trim();
                    match key.trim() {
                        "n" => {
                            declared_n = Some(value.parse::<usize>().map_err(|e| {
                                Error::Parse(format!("line {}: bad n: {e}", lineno + 1))
                            })?)
                        }
                        "model" => model = Some(value.to_string()),
                        "seed" => {
                            seed = Some(value.parse::<u64>().map_err(|e| {
                                Error::Parse(format!("line {}: bad seed: {e}", lineno + 1))
                            })?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let v = line.parse::<f64>().map_err(|e| {
                Error::Parse(format!("line {}: bad value {line:?}: {e}", lineno + 1))
            })?;
            values.push(v);
        }
        if let Some(n) = declared_n {
            if n != values.len() {
                return Err(Error::Parse(format!(
                    "header declares n = {n} but {} values follow",
                    values.len()
                )));
            }
        }
        Sample::with_provenance(values, model, seed).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_text(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_text(BufReader::new(File::open(path)?))
    }
}

/// The 1-based index `i = ⌈nt⌉` with `i ≥ nt > i − 1`, for `0 < t ≤ 1`.
///
/// Values of `t` that are exactly `j/n` as floating-point quotients map to `j`.
pub fn quantile_index(n: usize, t: f64) -> usize {
    debug_assert!(t > 0.0 && t <= 1.0);
    let nf = n as f64;
    let mut i = (nf * t).ceil().clamp(1.0, nf) as usize;
    while i > 1 && (i - 1) as f64 / nf >= t {
        i -= 1;
    }
    while i < n && (i as f64) / nf < t {
        i += 1;
    }
    i
}

/// `⌈n x⌉` for `x ≥ 0`, exact when `x` is the quotient `j/n`.
pub fn quantile_index_unclamped(n: usize, x: f64) -> usize {
    let nf = n as f64;
    if !(x > 0.0) {
        return 0;
    }
    let mut i = (nf * x).ceil() as usize;
    while i > 0 && (i - 1) as f64 / nf >= x {
        i -= 1;
    }
    while (i as f64) / nf < x {
        i += 1;
    }
    i
}

/// `F_n(x) = n⁻¹ #{X_i ≤ x}`.
pub fn edf_eval(sample: &Sample, x: f64) -> f64 {
    let count = sample.order_stats.partition_point(|&v| v <= x);
    count as f64 / sample.n() as f64
}

/// Left-continuous empirical quantile function with the boundary clamps
/// `Q_n(t) = 0` for `t ≤ 0` and `Q_n(t) = Q_n(1)` for `t ≥ 1`.
pub fn eqf_eval(sample: &Sample, t: f64) -> f64 {
    let n = sample.n();
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        sample.order_stats[n - 1]
    } else {
        sample.order_stats[quantile_index(n, t) - 1]
    }
}

/// `α_n(t) = √n (F_n(t) − t)`.
pub fn alpha_eval(sample: &Sample, t: f64) -> f64 {
    (sample.n() as f64).sqrt() * (edf_eval(sample, t) - t)
}

/// `β_n(t) = √n (Q_n(t) − t)`.
pub fn beta_eval(sample: &Sample, t: f64) -> f64 {
    (sample.n() as f64).sqrt() * (eqf_eval(sample, t) - t)
}

/// Normed quantile process `b_n(t) = √n (Q_n(t) − Q(t)) / q(t)` on a raw sample.
pub fn bn_eval(sample: &Sample, model: &DistributionModel, t: f64) -> Result<f64> {
    crate::distributions::check_open_unit("t", t)?;
    Ok(bn_raw(sample, model, t))
}

fn bn_raw(sample: &Sample, model: &DistributionModel, t: f64) -> f64 {
    (sample.n() as f64).sqrt() * (eqf_eval(sample, t) - model.quantile(t))
        / model.quantile_density_raw(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// Increments of the uniform empirical process `α_n`.
    Xi,
    /// Increments of the uniform quantile process `β_n`.
    Zeta,
    /// Increments of the normed quantile process `b_n`.
    Theta,
}

/// Normalized increments `(P(t + hs) − P(t)) / √(2h log(1/h))` of a process `P`
/// on a grid of `s` values.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementField {
    pub h: f64,
    pub t: f64,
    pub s_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub flavor: Flavor,
}

impl IncrementField {
    /// The field as a piecewise-linear function on `[-1, 1]`.
    pub fn to_grid_function(&self) -> Result<GridFunction> {
        GridFunction::new(self.s_grid.clone(), self.values.clone())
    }
}

/// `m` equally spaced nodes on `[-1, 1]`; `m` must be odd so that 0 is a node.
pub fn default_s_grid(m: usize) -> Result<Vec<f64>> {
    if m < 3 || m % 2 == 0 {
        return Err(Error::Range(format!(
            "s-grid size {m} must be odd and at least 3"
        )));
    }
    let half = (m - 1) as f64;
    Ok((0..m).map(|i| (2.0 * i as f64 - half) / half).collect())
}

/// Default two-sided grid size.
pub const DEFAULT_S_GRID: usize = 65;

/// Fills `out` with the normalized increments of the chosen process.
pub(crate) fn increment_values_into(
    sample: &Sample,
    model: Option<&DistributionModel>,
    h: f64,
    t: f64,
    s_grid: &[f64],
    flavor: Flavor,
    out: &mut [f64],
) -> Result<()> {
    let scale = increment_scale(h)?;
    debug_assert_eq!(out.len(), s_grid.len());
    match flavor {
        Flavor::Xi => {
            let base = alpha_eval(sample, t);
            for (o, &s) in out.iter_mut().zip(s_grid) {
                *o = if s == 0.0 {
                    0.0
                } else {
                    (alpha_eval(sample, t + h * s) - base) / scale
                };
            }
        }
        Flavor::Zeta => {
            let base = beta_eval(sample, t);
            for (o, &s) in out.iter_mut().zip(s_grid) {
                *o = if s == 0.0 {
                    0.0
                } else {
                    (beta_eval(sample, t + h * s) - base) / scale
                };
            }
        }
        Flavor::Theta => {
            let model = model.ok_or_else(|| {
                Error::Precondition("theta increments need a distribution model".into())
            })?;
            let lo = s_grid.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = s_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for u in [t, t + h * lo, t + h * hi] {
                crate::distributions::check_open_unit("t + h·s", u)?;
            }
            let base = bn_raw(sample, model, t);
            for (o, &s) in out.iter_mut().zip(s_grid) {
                *o = if s == 0.0 {
                    0.0
                } else {
                    (bn_raw(sample, model, t + h * s) - base) / scale
                };
            }
        }
    }
    Ok(())
}

/// Builds the normalized increment field `ξ_n`, `ζ_n` or `ϑ_n` at `(h, t)`.
pub fn increment_field(
    sample: &Sample,
    model: Option<&DistributionModel>,
    h: f64,
    t: f64,
    s_grid: &[f64],
    flavor: Flavor,
) -> Result<IncrementField> {
    if !s_grid.windows(2).all(|w| w[0] < w[1]) || !s_grid.contains(&0.0) {
        return Err(Error::InvalidGrid(
            "s-grid must be strictly increasing and contain 0".into(),
        ));
    }
    let mut values = vec![0.0; s_grid.len()];
    increment_values_into(sample, model, h, t, s_grid, flavor, &mut values)?;
    Ok(IncrementField {
        h,
        t,
        s_grid: s_grid.to_vec(),
        values,
        flavor,
    })
}

/// Exact `sup_{0≤t≤1} |α_n(t) + β_n(t)|` for a sample in `[0, 1]`.
///
/// Between consecutive jumps of `F_n` and `Q_n` the sum is affine in `t` with
/// slope `−2√n`, so the supremum is the largest absolute value among the
/// one-sided limits at jump points and the interval endpoints.
pub fn bk_gap(sample: &Sample) -> f64 {
    let u = &sample.order_stats;
    let n = u.len();
    let nf = n as f64;
    let below = |p: f64| u.partition_point(|&v| v < p) as f64 / nf;
    let at_or_below = |p: f64| u.partition_point(|&v| v <= p) as f64 / nf;
    // V_n at t and just to the right of t, for 0 < t < 1.
    let v_at = |p: f64| u[quantile_index(n, p) - 1];
    let v_right = |p: f64| {
        let i = quantile_index(n, p);
        if (i as f64) / nf == p {
            u[(i + 1).min(n) - 1]
        } else {
            u[i - 1]
        }
    };

    // t = 0 and its right limit.
    let mut sup = at_or_below(0.0).abs();
    sup = sup.max((at_or_below(0.0) + u[0]).abs());
    // t = 1.
    sup = sup.max((at_or_below(1.0) + u[n - 1] - 2.0).abs());

    let mut visit = |p: f64| {
        if !(p > 0.0 && p <= 1.0) {
            return;
        }
        let v = v_at(p);
        sup = sup.max((below(p) + v - 2.0 * p).abs());
        sup = sup.max((at_or_below(p) + v - 2.0 * p).abs());
        if p < 1.0 {
            sup = sup.max((at_or_below(p) + v_right(p) - 2.0 * p).abs());
        }
    };
    for &p in u {
        visit(p);
    }
    for j in 1..=n {
        visit(j as f64 / nf);
    }
    nf.sqrt() * sup
}

/// `e_n^{(1)} = 25 log₂ n / n`.
pub fn boundary_margin(n: usize) -> f64 {
    25.0 * iterated_log(n as f64) / n as f64
}

/// `sup |b_n(t) − β_n(t)|` over `[e_n, 1 − e_n]`, where `β_n` is built from the
/// uniforms `F(X_i)` underlying the raw sample.
///
/// On each piece `((i−1)/n, i/n]` the difference has a single critical point,
/// where it vanishes, so its modulus peaks at piece ends; those are enumerated
/// together with a 1000-point fill grid.
pub fn cr_gap(sample: &Sample, model: &DistributionModel) -> Result<f64> {
    let n = sample.n();
    let nf = n as f64;
    let e = boundary_margin(n);
    if e >= 0.5 {
        return Err(Error::Domain(format!(
            "boundary margin {e} ≥ 1/2 at n = {n}"
        )));
    }
    let x = &sample.order_stats;
    let diff = |i: usize, t: f64| {
        let xi = x[i - 1];
        let ui = model.cdf(xi);
        (xi - model.quantile(t)) / model.quantile_density_raw(t) - (ui - t)
    };
    let (lo, hi) = (e, 1.0 - e);
    let first = quantile_index(n, lo);
    let last = quantile_index(n, hi);
    let mut sup = 0.0f64;
    for i in first..=last {
        let left = ((i - 1) as f64 / nf).max(lo);
        let right = (i as f64 / nf).min(hi);
        sup = sup.max(diff(i, left).abs()).max(diff(i, right).abs());
    }
    const FILL: usize = 1000;
    for j in 0..=FILL {
        let t = lo + (hi - lo) * j as f64 / FILL as f64;
        sup = sup.max(diff(quantile_index(n, t), t).abs());
    }
    Ok(nf.sqrt() * sup)
}
