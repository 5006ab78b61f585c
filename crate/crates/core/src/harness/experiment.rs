//! Monte Carlo experiments.
//!
//! Every replicate owns its sample, drawn from the seed
//! [`derive_seed`](super::seed::derive_seed)`(master_seed, n, replicate)`.
//! Replicates run in parallel and their rows are merged and sorted by
//! `(n, h, replicate)` afterwards, so the output does not depend on the
//! number of worker threads.

use std::time::Instant;

use rayon::prelude::*;

use super::bandwidth::{check_hypotheses, t_range};
use super::config::{ExperimentConfig, ExperimentKind};
use super::report::{aggregate_rows, ExperimentReport, Row};
use super::seed::derive_seed;
use super::window::{stride_grid, with_jumps, BetaPieces};
use crate::density::{
    common_x_grid, empirical_interval, linspace, nn_statistic, pr_statistic, radius_gap, Kernel,
};
use crate::distributions::{iterated_log, DistributionModel};
use crate::empirical::{bk_gap, cr_gap, default_s_grid, increment_values_into, Flavor, Sample};
use crate::spacings::{delta_profile, dn_profile, order_for_bandwidth};
use crate::strassen::{distance_to_s0, sup_norm, test_set, GridFunction};
use crate::{increment_scale, Result};

/// Sort key `(n, h index, replicate, sub-index)`.
type Key = (usize, usize, usize, usize);

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    model: DistributionModel,
    kernel: Option<Kernel>,
}

impl Ctx<'_> {
    fn row(
        &self,
        label: &str,
        n: usize,
        h: Option<f64>,
        rep: usize,
        seed: u64,
        value: Result<f64>,
    ) -> Row {
        let (statistic, valid, error) = match value {
            Ok(v) if v.is_finite() => (v, true, None),
            Ok(v) => (f64::NAN, false, Some(format!("non-finite statistic {v}"))),
            Err(e) => (f64::NAN, false, Some(e.to_string())),
        };
        Row {
            experiment: label.to_string(),
            model: self.model.name.to_string(),
            kernel: self.kernel.as_ref().map(|k| k.name.to_string()),
            n,
            h,
            replicate: rep,
            statistic,
            valid,
            seed,
            error,
        }
    }
}

/// `t`-anchors `t0 + j·h/t_stride`, plus `t1`.
fn t_grid(t0: f64, t1: f64, h: f64, t_stride: usize) -> Vec<f64> {
    stride_grid(t0, t1, h / t_stride as f64)
}

/// `sup_t dist(field(h, t), S₀)` over the `t`-grid.
fn sup_distance(
    sample: &Sample,
    model: Option<&DistributionModel>,
    flavor: Flavor,
    h: f64,
    ts: &[f64],
    s_grid: &[f64],
) -> Result<f64> {
    let mut phi = GridFunction::new(s_grid.to_vec(), vec![0.0; s_grid.len()])?;
    let mut best = 0.0f64;
    for &t in ts {
        increment_values_into(sample, model, h, t, s_grid, flavor, phi.values_mut())?;
        // The zero function bounds the distance by the sup norm.
        if sup_norm(&phi) <= best {
            continue;
        }
        best = best.max(distance_to_s0(&phi)?.distance);
    }
    Ok(best)
}

/// `inf_t ‖ζ-field(h, t) − g‖` for each `g`, over the `t`-grid.
fn inf_cover(
    sample: &Sample,
    h: f64,
    ts: &[f64],
    s_grid: &[f64],
    targets: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let mut buf = vec![0.0; s_grid.len()];
    let mut best = vec![f64::INFINITY; targets.len()];
    for &t in ts {
        increment_values_into(sample, None, h, t, s_grid, Flavor::Zeta, &mut buf)?;
        for (b, g) in best.iter_mut().zip(targets) {
            let d = buf
                .iter()
                .zip(g)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            *b = b.min(d);
        }
    }
    Ok(best)
}

/// Rows of one replicate for the experiments that need no cross-replicate
/// centering.
fn replicate_rows(ctx: &Ctx, n: usize, rep: usize, h_grid: &[f64]) -> Vec<(Key, Row)> {
    let cfg = ctx.cfg;
    let kind = cfg.experiment;
    let label = kind.name();
    let seed = derive_seed(cfg.master_seed, n as u64, rep as u64);
    let sample = match Sample::draw(&ctx.model, n, seed) {
        Ok(s) => s,
        Err(e) => {
            let msg = e.to_string();
            let hs: Vec<Option<f64>> = if kind.bandwidth_free() {
                vec![None]
            } else {
                h_grid.iter().map(|&h| Some(h)).collect()
            };
            return hs
                .into_iter()
                .enumerate()
                .map(|(j, h)| {
                    let err = Err(crate::Error::Evaluation(msg.clone()));
                    ((n, j, rep, 0), ctx.row(label, n, h, rep, seed, err))
                })
                .collect();
        }
    };
    let nf = n as f64;
    let per_h = |f: &dyn Fn(f64) -> Result<f64>| -> Vec<(Key, Row)> {
        h_grid
            .iter()
            .enumerate()
            .map(|(j, &h)| ((n, j, rep, 0), ctx.row(label, n, Some(h), rep, seed, f(h))))
            .collect()
    };
    match kind {
        ExperimentKind::Thm21Dist | ExperimentKind::Thm11 => {
            let s_grid = match default_s_grid(cfg.s_grid_size) {
                Ok(g) => g,
                Err(e) => return per_h(&|_| Err(crate::Error::Range(e.to_string()))),
            };
            per_h(&|h| {
                let (t0, t1, model, flavor) = if kind == ExperimentKind::Thm21Dist {
                    (h, 1.0 - h, None, Flavor::Zeta)
                } else {
                    let (a, b) = t_range(n, h)?;
                    (a, b, Some(&ctx.model), Flavor::Theta)
                };
                sup_distance(
                    &sample,
                    model,
                    flavor,
                    h,
                    &t_grid(t0, t1, h, cfg.t_stride),
                    &s_grid,
                )
            })
        }
        ExperimentKind::Thm21Cover => {
            let s_grid = match default_s_grid(cfg.s_grid_size) {
                Ok(g) => g,
                Err(e) => return per_h(&|_| Err(crate::Error::Range(e.to_string()))),
            };
            let targets: Vec<Vec<f64>> = test_set(cfg.cover_elements)
                .iter()
                .map(|g| s_grid.iter().map(|&s| g.eval(s)).collect())
                .collect();
            let mut out = Vec::new();
            for (j, &h) in h_grid.iter().enumerate() {
                let ts = t_grid(cfg.c1, cfg.c2, h, cfg.t_stride);
                let res =
                    increment_scale(h).and_then(|_| inf_cover(&sample, h, &ts, &s_grid, &targets));
                for g in 0..targets.len() {
                    let v = match &res {
                        Ok(vals) => Ok(vals[g]),
                        Err(e) => Err(crate::Error::Evaluation(e.to_string())),
                    };
                    let name = format!("{label}/g{g}");
                    out.push(((n, j, rep, g), ctx.row(&name, n, Some(h), rep, seed, v)));
                }
            }
            out
        }
        ExperimentKind::Cor21 | ExperimentKind::Conj412 => {
            let pieces = BetaPieces::new(&sample);
            per_h(&|h| {
                let scale = increment_scale(h)?;
                let (t0, t1, s_lo) = if kind == ExperimentKind::Cor21 {
                    (h, 1.0 - h, -1.0)
                } else {
                    (0.0, 1.0 - h, 0.0)
                };
                let ts = with_jumps(&t_grid(t0, t1, h, cfg.t_stride), n, t0, t1);
                Ok(pieces.sup_increment(&ts, h, s_lo, 1.0) / scale)
            })
        }
        ExperimentKind::Thm31 | ExperimentKind::Thm32 => {
            // One scan up to the largest order serves every bandwidth.
            let d_max = h_grid
                .iter()
                .map(|&h| order_for_bandwidth(n, h).unwrap_or(0))
                .max()
                .unwrap_or(0)
                .clamp(1, n);
            let profile = if kind == ExperimentKind::Thm31 {
                delta_profile(&sample, d_max)
            } else {
                dn_profile(&sample, &ctx.model, d_max)
            };
            let prefix: Result<Vec<f64>> = profile.map(|p| {
                p.iter()
                    .scan(f64::NEG_INFINITY, |m, &v| {
                        *m = m.max(v);
                        Some(*m)
                    })
                    .collect()
            });
            per_h(&|h| {
                let scale = increment_scale(h)?;
                let d = order_for_bandwidth(n, h)?;
                let prefix = prefix
                    .as_ref()
                    .map_err(|e| crate::Error::Evaluation(e.to_string()))?;
                let raw = prefix[d.min(prefix.len()) - 1];
                Ok(nf.sqrt() * raw / scale)
            })
        }
        ExperimentKind::BkRate => {
            let rate = nf.powf(-0.25) * nf.ln().sqrt() * iterated_log(nf).powf(0.25);
            vec![(
                (n, 0, rep, 0),
                ctx.row(label, n, None, rep, seed, Ok(bk_gap(&sample) / rate)),
            )]
        }
        ExperimentKind::CrRate => {
            let rate = iterated_log(nf) / nf.sqrt();
            let v = cr_gap(&sample, &ctx.model).map(|g| g / rate);
            vec![((n, 0, rep, 0), ctx.row(label, n, None, rep, seed, v))]
        }
        ExperimentKind::RadiusGap => {
            let grid = empirical_interval(&sample, cfg.t1, cfg.t2)
                .map(|(a, b)| linspace(a, b, cfg.x_grid_size));
            per_h(&|h| {
                let x = grid
                    .as_ref()
                    .map_err(|e| crate::Error::Evaluation(e.to_string()))?;
                radius_gap(&sample, &ctx.model, &[nf * h], x)
            })
        }
        ExperimentKind::Thm33 | ExperimentKind::Prop42 => unreachable!("centered experiments"),
    }
}

/// Rows of the centered density experiments at one sample size.
fn centered_rows(ctx: &Ctx, n: usize, h_grid: &[f64]) -> Vec<(Key, Row)> {
    let cfg = ctx.cfg;
    let label = cfg.experiment.name();
    let kernel = ctx.kernel.as_ref().expect("validated: kernel present");
    let seeds: Vec<u64> = (0..cfg.replicates)
        .map(|r| derive_seed(cfg.master_seed, n as u64, r as u64))
        .collect();
    let samples: Result<Vec<Sample>> = seeds
        .par_iter()
        .map(|&s| Sample::draw(&ctx.model, n, s))
        .collect();
    let nf = n as f64;
    let x_grid = samples.as_ref().map_err(|e| e.to_string()).and_then(|s| {
        if cfg.experiment == ExperimentKind::Thm33 {
            common_x_grid(s, cfg.t1, cfg.t2, cfg.x_grid_size).map_err(|e| e.to_string())
        } else {
            let (a, b) = (ctx.model.quantile(cfg.t1), ctx.model.quantile(cfg.t2));
            Ok(linspace(a, b, cfg.x_grid_size))
        }
    });
    let per_h: Vec<Vec<(Key, Row)>> = h_grid
        .par_iter()
        .enumerate()
        .map(|(j, &h)| {
            let stats = match (&samples, &x_grid) {
                (Ok(s), Ok(x)) => {
                    if cfg.experiment == ExperimentKind::Thm33 {
                        nn_statistic(s, &ctx.model, kernel, nf * h, x)
                    } else {
                        pr_statistic(s, &ctx.model, kernel, h, x)
                    }
                }
                (Err(e), _) => Err(crate::Error::Evaluation(e.to_string())),
                (_, Err(e)) => Err(crate::Error::Evaluation(e.clone())),
            };
            seeds
                .iter()
                .enumerate()
                .map(|(rep, &seed)| {
                    let v = match &stats {
                        Ok(v) => Ok(v[rep]),
                        Err(e) => Err(crate::Error::Evaluation(e.to_string())),
                    };
                    ((n, j, rep, 0), ctx.row(label, n, Some(h), rep, seed, v))
                })
                .collect()
        })
        .collect();
    per_h.into_iter().flatten().collect()
}

/// Runs the configured experiment over every `n`, bandwidth and replicate.
///
/// Invalid rows (degenerate radius, empty index range, ...) are kept with
/// `valid = false`. Hypothesis violations are recorded as warnings.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let ctx = Ctx {
        cfg,
        model: cfg.model()?,
        kernel: cfg.kernel()?,
    };
    let kind = cfg.experiment;
    let mut warnings = Vec::new();
    let hypotheses = if kind.bandwidth_free() {
        None
    } else if cfg.n_list.len() >= 3 {
        let rep = check_hypotheses(&cfg.plan, &cfg.n_list)?;
        for c in rep.checks.iter().filter(|c| !c.satisfied) {
            warnings.push(format!("{} trend is {:?} on n_list", c.name, c.trend));
        }
        warnings.extend(rep.warnings.iter().cloned());
        Some(rep)
    } else {
        warnings.push("n_list has fewer than 3 sizes; bandwidth hypotheses not checked".into());
        None
    };
    let mut keyed: Vec<(Key, Row)> = Vec::new();
    for &n in &cfg.n_list {
        let h_grid = if kind.bandwidth_free() {
            Vec::new()
        } else {
            cfg.plan.h_grid(n)?
        };
        if kind.needs_centering() {
            keyed.extend(centered_rows(&ctx, n, &h_grid));
        } else {
            let per_rep: Vec<Vec<(Key, Row)>> = (0..cfg.replicates)
                .into_par_iter()
                .map(|rep| replicate_rows(&ctx, n, rep, &h_grid))
                .collect();
            keyed.extend(per_rep.into_iter().flatten());
        }
    }
    keyed.sort_by_key(|(k, _)| *k);
    let rows: Vec<Row> = keyed.into_iter().map(|(_, r)| r).collect();
    let (aggregates, summaries) = aggregate_rows(&rows);
    Ok(ExperimentReport {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        hypotheses,
        warnings,
        rows,
        aggregates,
        summaries,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::bandwidth::{BandwidthPlan, BandwidthRule, DEFAULT_GRID_RATIO};
    use crate::harness::report::rows_to_csv;
    use crate::spacings::{spacing_statistic, SpacingTheorem};

    fn cfg(kind: ExperimentKind, n_list: Vec<usize>, reps: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(kind);
        c.n_list = n_list;
        c.replicates = reps;
        c.master_seed = 11;
        c
    }

    #[test]
    fn smoke_thm21_dist() {
        let mut c = cfg(ExperimentKind::Thm21Dist, vec![1000], 1);
        c.plan = BandwidthPlan::new(
            BandwidthRule::power(-0.5),
            BandwidthRule::power(-0.5),
            DEFAULT_GRID_RATIO,
        )
        .unwrap();
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.rows.iter().all(|r| r.valid && r.statistic.is_finite()));
        assert_eq!(r.aggregates.len(), 1);
        assert_eq!(r.summaries.len(), 1);
    }

    #[test]
    fn row_accounting_and_order() {
        let c = cfg(ExperimentKind::Cor21, vec![200, 400], 3);
        let r = run_experiment(&c).unwrap();
        let expected: usize = c
            .n_list
            .iter()
            .map(|&n| c.plan.h_grid(n).unwrap().len() * 3)
            .sum();
        assert_eq!(r.rows.len(), expected);
        let mut prev = (0usize, 0.0f64, 0usize);
        for row in &r.rows {
            let key = (row.n, row.h.unwrap(), row.replicate);
            assert!(
                key.0 > prev.0
                    || (key.0 == prev.0
                        && (key.1 > prev.1 || (key.1 == prev.1 && key.2 >= prev.2)))
            );
            prev = key;
        }
        let c = cfg(ExperimentKind::Thm21Cover, vec![300], 2);
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.rows.len(), c.plan.h_grid(300).unwrap().len() * 2 * 5);
        assert_eq!(r.summaries.len(), 5);
    }

    #[test]
    fn deterministic_csv() {
        let c = cfg(ExperimentKind::Thm21Dist, vec![300, 600], 2);
        let a = rows_to_csv(&run_experiment(&c).unwrap().rows);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| rows_to_csv(&run_experiment(&c).unwrap().rows));
        assert_eq!(a, b);
    }

    #[test]
    fn spacing_rows_match_direct_evaluation() {
        for kind in [ExperimentKind::Thm31, ExperimentKind::Thm32] {
            let mut c = cfg(kind, vec![20_000], 1);
            c.model = "uniform".into();
            let r = run_experiment(&c).unwrap();
            let s = Sample::draw(&c.model().unwrap(), 20_000, derive_seed(11, 20_000, 0)).unwrap();
            let which = if kind == ExperimentKind::Thm31 {
                SpacingTheorem::Thm31
            } else {
                SpacingTheorem::Thm32
            };
            for row in &r.rows {
                let direct =
                    spacing_statistic(&s, Some(&c.model().unwrap()), row.h.unwrap(), which)
                        .unwrap();
                assert_eq!(row.statistic, direct);
            }
        }
    }

    #[test]
    fn invalid_rows_are_kept() {
        // At n = 30 the restricted spacing range is empty.
        let mut c = cfg(ExperimentKind::Thm32, vec![30], 2);
        c.model = "exp1".into();
        let r = run_experiment(&c).unwrap();
        assert!(!r.rows.is_empty());
        assert!(r.rows.iter().all(|r| !r.valid && r.error.is_some()));
    }

    #[test]
    fn centered_experiments_run() {
        let mut c = cfg(ExperimentKind::Prop42, vec![2000], 3);
        c.kernel = Some("epanechnikov".into());
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.rows.len(), c.plan.h_grid(2000).unwrap().len() * 3);
        assert!(r.rows.iter().all(|r| r.valid));
        let c = cfg(ExperimentKind::Thm33, vec![2000], 3);
        let r = run_experiment(&c).unwrap();
        assert!(r.rows.iter().all(|r| r.valid));
    }
}
