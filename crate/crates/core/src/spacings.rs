//! k-spacings of order statistics and their maximal deviations.
//!
//! Uniform samples use the augmented order statistics `U_(0) = 0`,
//! `U_(n+1) = 1` and all indices `i = 0..=n+1−k`. General samples use the
//! restricted index range `i_1 ≤ i ≤ i_2(k)` that keeps `i/n` and `(i+k)/n`
//! at least `e_n = 25 log₂ n / n` away from 0 and 1.

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionModel;
use crate::empirical::{boundary_margin, Sample};
use crate::{increment_scale, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacingIndexBounds {
    pub n: usize,
    pub k: usize,
    pub e_n1: f64,
    /// `min{i : i/n ≥ e_n}`.
    pub i1: usize,
    /// `max{i : (i+k)/n ≤ 1 − e_n}`.
    pub i2: usize,
}

/// The largest deviation among the k-spacings of one order `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMaximum {
    pub k: usize,
    /// Index `i` of the spacing `X_(i+k) − X_(i)` attaining the maximum.
    pub i_argmax: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacingTheorem {
    /// Uniform spacings with augmented endpoints.
    Thm31,
    /// Density-weighted spacings over the restricted index range.
    Thm32,
}

fn check_k(n: usize, k: usize, label: &str) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Range(format!("{label} = {k} must lie in 1..={n}")));
    }
    Ok(())
}

fn augmented(sample: &Sample) -> Result<Vec<f64>> {
    let u = sample.order_stats();
    if u[0] < 0.0 || u[u.len() - 1] > 1.0 {
        return Err(Error::Domain(
            "uniform spacings need values in [0, 1]".into(),
        ));
    }
    let mut aug = Vec::with_capacity(u.len() + 2);
    aug.push(0.0);
    aug.extend_from_slice(u);
    aug.push(1.0);
    Ok(aug)
}

/// `Δ_{i,n}(k) = U_(k+i) − U_(i)` for `i = 0..=n+1−k`.
pub fn uniform_k_spacings(sample: &Sample, k: usize) -> Result<Vec<f64>> {
    let n = sample.n();
    check_k(n, k, "k")?;
    let aug = augmented(sample)?;
    Ok((0..=n + 1 - k).map(|i| aug[i + k] - aug[i]).collect())
}

/// Maximum and minimum of `w_i (a[i+k] − a[i])` over `i` in `range`, with
/// `w ≡ 1` when `weights` is `None`. Eight independent lanes keep the loop
/// vectorizable.
fn weighted_diff_extrema(
    a: &[f64],
    weights: Option<&[f64]>,
    k: usize,
    range: std::ops::RangeInclusive<usize>,
) -> (f64, f64) {
    const LANES: usize = 8;
    let (start, end) = (*range.start(), *range.end());
    let len = end + 1 - start;
    let hi_src = &a[start + k..=end + k];
    let lo_src = &a[start..=end];
    let mut mx = [f64::NEG_INFINITY; LANES];
    let mut mn = [f64::INFINITY; LANES];
    let chunks = len / LANES;
    match weights {
        None => {
            for c in 0..chunks {
                let base = c * LANES;
                for l in 0..LANES {
                    let d = hi_src[base + l] - lo_src[base + l];
                    mx[l] = if d > mx[l] { d } else { mx[l] };
                    mn[l] = if d < mn[l] { d } else { mn[l] };
                }
            }
            for i in chunks * LANES..len {
                let d = hi_src[i] - lo_src[i];
                mx[0] = mx[0].max(d);
                mn[0] = mn[0].min(d);
            }
        }
        Some(w) => {
            let w = &w[start..=end];
            for c in 0..chunks {
                let base = c * LANES;
                for l in 0..LANES {
                    let d = w[base + l] * (hi_src[base + l] - lo_src[base + l]);
                    mx[l] = if d > mx[l] { d } else { mx[l] };
                    mn[l] = if d < mn[l] { d } else { mn[l] };
                }
            }
            for i in chunks * LANES..len {
                let d = w[i] * (hi_src[i] - lo_src[i]);
                mx[0] = mx[0].max(d);
                mn[0] = mn[0].min(d);
            }
        }
    }
    (
        mx.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        mn.iter().cloned().fold(f64::INFINITY, f64::min),
    )
}

/// `max_i |Δ_{i,n}(k) − k/n|` for every `k = 1..=d`, in order.
pub fn delta_profile(sample: &Sample, d: usize) -> Result<Vec<f64>> {
    let n = sample.n();
    check_k(n, d, "d")?;
    let aug = augmented(sample)?;
    let nf = n as f64;
    Ok((1..=d)
        .map(|k| {
            let target = k as f64 / nf;
            let (mx, mn) = weighted_diff_extrema(&aug, None, k, 0..=n + 1 - k);
            (mx - target).max(target - mn)
        })
        .collect())
}

/// Per-order maxima `max_i |Δ_{i,n}(k) − k/n|` with their argmax, `k = 1..=d`.
pub fn delta_per_k(sample: &Sample, d: usize) -> Result<Vec<KMaximum>> {
    let n = sample.n();
    check_k(n, d, "d")?;
    let aug = augmented(sample)?;
    let nf = n as f64;
    Ok((1..=d)
        .map(|k| {
            let target = k as f64 / nf;
            let mut best = KMaximum {
                k,
                i_argmax: 0,
                value: f64::NEG_INFINITY,
            };
            for i in 0..=n + 1 - k {
                let v = (aug[i + k] - aug[i] - target).abs();
                if v > best.value {
                    best.value = v;
                    best.i_argmax = i;
                }
            }
            best
        })
        .collect())
}

/// `δ_n(d) = max_{1≤k≤d} max_{0≤i≤n+1−k} |Δ_{i,n}(k) − k/n|`.
pub fn delta_stat(sample: &Sample, d: usize) -> Result<f64> {
    Ok(delta_profile(sample, d)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Restricted index range for k-spacings of a sample of size `n`.
pub fn index_bounds(n: usize, k: usize) -> Result<SpacingIndexBounds> {
    if n == 0 {
        return Err(Error::Range("n must be at least 1".into()));
    }
    check_k(n, k, "k")?;
    let nf = n as f64;
    let e = boundary_margin(n);
    let mut i1 = (nf * e).ceil().max(0.0) as usize;
    while i1 > 0 && (i1 - 1) as f64 / nf >= e {
        i1 -= 1;
    }
    while (i1 as f64) / nf < e {
        i1 += 1;
    }
    let fits = |i: usize| ((i + k) as f64) / nf <= 1.0 - e;
    let upper = (nf * (1.0 - e)).floor() as i64 - k as i64;
    let mut i2 = upper + 1;
    while i2 >= 0 && !fits(i2 as usize) {
        i2 -= 1;
    }
    if i2 < 0 || (i2 as usize) < i1 {
        return Err(Error::EmptyRange(format!(
            "no admissible spacing index for n = {n}, k = {k} (e_n = {e})"
        )));
    }
    Ok(SpacingIndexBounds {
        n,
        k,
        e_n1: e,
        i1,
        i2: i2 as usize,
    })
}

/// `D_{i,n}(k) = X_(k+i) − X_(i)` for `i = i_1..=i_2(k)`.
pub fn general_k_spacings(sample: &Sample, k: usize) -> Result<Vec<f64>> {
    let b = index_bounds(sample.n(), k)?;
    let x = sample.order_stats();
    Ok((b.i1..=b.i2).map(|i| x[i + k - 1] - x[i - 1]).collect())
}

/// `f(X_(i))` at every order statistic.
fn densities_at_order_stats(sample: &Sample, model: &DistributionModel) -> Vec<f64> {
    sample
        .order_stats()
        .iter()
        .map(|&x| model.density(x))
        .collect()
}

/// `max_{i_1≤i≤i_2(k)} f(X_(i)) |D_{i,n}(k) − k/(n f(X_(i)))|` for `k = 1..=d`.
///
/// Orders whose index range is empty are skipped; the range shrinks with `k`,
/// so the profile may be shorter than `d`. Fails if even `k = 1` is empty.
pub fn dn_profile(sample: &Sample, model: &DistributionModel, d: usize) -> Result<Vec<f64>> {
    let n = sample.n();
    check_k(n, d, "d")?;
    index_bounds(n, 1)?;
    let f = densities_at_order_stats(sample, model);
    // 0-based views: x[i-1] = X_(i), weights shifted alike.
    let x = sample.order_stats();
    let nf = n as f64;
    let mut out = Vec::with_capacity(d);
    for k in 1..=d {
        let b = match index_bounds(n, k) {
            Ok(b) => b,
            Err(Error::EmptyRange(_)) => break,
            Err(e) => return Err(e),
        };
        let target = k as f64 / nf;
        let (mx, mn) = weighted_diff_extrema(x, Some(&f), k, b.i1 - 1..=b.i2 - 1);
        out.push((mx - target).max(target - mn));
    }
    Ok(out)
}

/// Per-order maxima of the density-weighted deviations, with argmax.
pub fn dn_per_k(sample: &Sample, model: &DistributionModel, d: usize) -> Result<Vec<KMaximum>> {
    let n = sample.n();
    check_k(n, d, "d")?;
    index_bounds(n, 1)?;
    let x = sample.order_stats();
    let nf = n as f64;
    let mut out = Vec::with_capacity(d);
    for k in 1..=d {
        let b = match index_bounds(n, k) {
            Ok(b) => b,
            Err(Error::EmptyRange(_)) => break,
            Err(e) => return Err(e),
        };
        let mut best = KMaximum {
            k,
            i_argmax: b.i1,
            value: f64::NEG_INFINITY,
        };
        for i in b.i1..=b.i2 {
            let fx = model.density(x[i - 1]);
            let v = fx * (x[i + k - 1] - x[i - 1] - k as f64 / (nf * fx)).abs();
            if v > best.value {
                best.value = v;
                best.i_argmax = i;
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// `d_n(d) = max_{1≤k≤d} max_{i_1≤i≤i_2(k)} f(X_(i)) |D_{i,n}(k) − k/(n f(X_(i)))|`.
pub fn dn_stat(sample: &Sample, model: &DistributionModel, d: usize) -> Result<f64> {
    Ok(dn_profile(sample, model, d)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `d = ⌈nh⌉`, with `⌈x⌉ ≥ x > ⌈x⌉ − 1`.
pub fn order_for_bandwidth(n: usize, h: f64) -> Result<usize> {
    let d = crate::empirical::quantile_index_unclamped(n, h);
    if d == 0 || d > n {
        return Err(Error::Range(format!(
            "⌈nh⌉ = {d} outside 1..={n} (h = {h})"
        )));
    }
    Ok(d)
}

/// `√n δ_n(⌈nh⌉) / √(2h log(1/h))` or `√n d_n(⌈nh⌉) / √(2h log(1/h))`.
pub fn spacing_statistic(
    sample: &Sample,
    model: Option<&DistributionModel>,
    h: f64,
    which: SpacingTheorem,
) -> Result<f64> {
    let scale = increment_scale(h)?;
    let n = sample.n();
    let d = order_for_bandwidth(n, h)?;
    let raw = match which {
        SpacingTheorem::Thm31 => delta_stat(sample, d)?,
        SpacingTheorem::Thm32 => {
            let model = model.ok_or_else(|| {
                Error::Precondition("density-weighted spacings need a model".into())
            })?;
            dn_stat(sample, model, d)?
        }
    };
    Ok((n as f64).sqrt() * raw / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14)
    }

    #[test]
    fn uniform_spacing_examples() {
        let x = s(&[0.9, 0.1, 0.4]);
        assert!(close(
            &uniform_k_spacings(&x, 1).unwrap(),
            &[0.1, 0.3, 0.5, 0.1]
        ));
        assert!(close(&uniform_k_spacings(&x, 3).unwrap(), &[0.9, 0.9]));
        assert!(uniform_k_spacings(&x, 4).is_err());
        assert!(uniform_k_spacings(&x, 0).is_err());
        let n = 9;
        let eq = s(&(1..=n)
            .map(|i| i as f64 / (n + 1) as f64)
            .collect::<Vec<_>>());
        for d in uniform_k_spacings(&eq, 1).unwrap() {
            assert!((d - 0.1).abs() < 1e-15);
        }
        assert!(uniform_k_spacings(&s(&[1.5]), 1).is_err());
    }

    #[test]
    fn delta_examples() {
        let x = s(&[0.1, 0.4, 0.9]);
        assert!((delta_stat(&x, 1).unwrap() - (1.0 / 3.0 - 0.1)).abs() < 1e-14);
        let n = 9;
        let eq = s(&(1..=n)
            .map(|i| i as f64 / (n + 1) as f64)
            .collect::<Vec<_>>());
        let expected = (0.1f64 - 1.0 / 9.0).abs();
        assert!((delta_stat(&eq, 1).unwrap() - expected).abs() < 1e-15);
        let mut prev = 0.0;
        for d in 1..=3 {
            let v = delta_stat(&x, d).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let per = delta_per_k(&x, 3).unwrap();
        assert!([0, 3].contains(&per[0].i_argmax));
        for (p, v) in per.iter().zip(delta_profile(&x, 3).unwrap()) {
            assert_eq!(p.value, v);
        }
    }

    #[test]
    fn index_bound_examples() {
        let b = index_bounds(10_000, 100).unwrap();
        assert!((b.e_n1 - 0.005_550_817_015_919_616).abs() < 1e-15);
        assert_eq!((b.i1, b.i2), (56, 9844));
        let b = index_bounds(100, 1).unwrap();
        assert!((b.e_n1 - 0.381_794_906_451_975_2).abs() < 1e-15);
        // i1 = ⌈38.18⌉; i2 is the largest i with (i + 1)/100 ≤ 0.618…
        assert_eq!((b.i1, b.i2), (39, 60));
        assert!(matches!(index_bounds(20, 1), Err(Error::EmptyRange(_))));
        assert!(index_bounds(100, 0).is_err());
        assert!(index_bounds(100, 101).is_err());
    }

    #[test]
    fn general_spacings_interior_slice() {
        let u = DistributionModel::uniform();
        let x = Sample::draw(&u, 2000, 1).unwrap();
        let b = index_bounds(2000, 3).unwrap();
        let all = uniform_k_spacings(&x, 3).unwrap();
        let inner = general_k_spacings(&x, 3).unwrap();
        assert_eq!(&all[b.i1..=b.i2], &inner[..]);
        assert!(inner.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn exponential_dn_by_hand() {
        // n = 1000 gives e_n = 0.0483, i1 = 49, i2(1) = 950.
        let e = DistributionModel::exponential();
        let x = Sample::draw(&e, 1000, 8).unwrap();
        let b = index_bounds(1000, 1).unwrap();
        assert_eq!((b.i1, b.i2), (49, 950));
        let xs = x.order_stats();
        let mut best: f64 = 0.0;
        for i in b.i1..=b.i2 {
            let f = (-xs[i - 1]).exp();
            best = best.max((f * (xs[i] - xs[i - 1]) - 1.0 / 1000.0).abs());
        }
        let got = dn_stat(&x, &e, 1).unwrap();
        assert!((got - best).abs() < 1e-15, "{got} vs {best}");
        assert!(dn_stat(&x, &e, 5).unwrap() >= got);
    }

    #[test]
    fn spacing_statistic_errors() {
        let u = DistributionModel::uniform();
        let x = Sample::draw(&u, 1000, 2).unwrap();
        assert!(spacing_statistic(&x, None, 0.0, SpacingTheorem::Thm31).is_err());
        assert!(spacing_statistic(&x, None, 0.01, SpacingTheorem::Thm32).is_err());
        assert!(spacing_statistic(&x, Some(&u), 0.01, SpacingTheorem::Thm32).unwrap() > 0.0);
    }
}
