//! Experiment reports, aggregation and CSV/JSON output.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bandwidth::HypothesisReport;
use super::config::ExperimentConfig;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "experiment,model,kernel,n,h,replicate,statistic,valid,seed";

/// One statistic value for one `(n, h, replicate)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// Experiment name, with a `/g<j>` suffix for per-element coverage rows.
    pub experiment: String,
    pub model: String,
    pub kernel: Option<String>,
    pub n: usize,
    pub h: Option<f64>,
    pub replicate: usize,
    /// `NaN` on invalid rows.
    pub statistic: f64,
    pub valid: bool,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Median, min and max of the valid rows sharing `(experiment, n, h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub experiment: String,
    pub n: usize,
    pub h: Option<f64>,
    pub valid: usize,
    pub invalid: usize,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

/// Per-replicate supremum over the bandwidth grid, summarized across
/// replicates for each `(experiment, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub n: usize,
    pub replicates: usize,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub library_version: String,
    pub config: ExperimentConfig,
    pub hypotheses: Option<HypothesisReport>,
    pub warnings: Vec<String>,
    pub rows: Vec<Row>,
    pub aggregates: Vec<Aggregate>,
    pub summaries: Vec<Summary>,
    pub wall_time_secs: f64,
}

impl ExperimentReport {
    /// Summary for `(experiment, n)`, if present.
    pub fn summary(&self, experiment: &str, n: usize) -> Option<&Summary> {
        self.summaries
            .iter()
            .find(|s| s.experiment == experiment && s.n == n)
    }

    /// Median summaries for `experiment` in `n_list` order.
    pub fn medians(&self, experiment: &str) -> Vec<f64> {
        self.config
            .n_list
            .iter()
            .map(|&n| self.summary(experiment, n).map_or(f64::NAN, |s| s.median))
            .collect()
    }
}

/// Median of a nonempty slice; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn extrema(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    (
        values.iter().copied().fold(f64::INFINITY, f64::min),
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

/// Aggregates and summaries of rows sorted by `(n, h, replicate)`; groups
/// appear in order of first occurrence.
pub fn aggregate_rows(rows: &[Row]) -> (Vec<Aggregate>, Vec<Summary>) {
    let mut aggregates: Vec<Aggregate> = Vec::new();
    let mut groups: Vec<(String, usize, Option<u64>, Vec<f64>, usize)> = Vec::new();
    for r in rows {
        let hb = r.h.map(f64::to_bits);
        let idx = match groups
            .iter()
            .position(|(e, n, h, _, _)| *e == r.experiment && *n == r.n && *h == hb)
        {
            Some(i) => i,
            None => {
                groups.push((r.experiment.clone(), r.n, hb, Vec::new(), 0));
                groups.len() - 1
            }
        };
        if r.valid {
            groups[idx].3.push(r.statistic);
        } else {
            groups[idx].4 += 1;
        }
    }
    for (experiment, n, h, vals, invalid) in groups {
        let (min, max) = extrema(&vals);
        aggregates.push(Aggregate {
            experiment,
            n,
            h: h.map(f64::from_bits),
            valid: vals.len(),
            invalid,
            median: median(&vals),
            min,
            max,
        });
    }

    let mut per_rep: Vec<(String, usize, Vec<(usize, f64)>)> = Vec::new();
    for r in rows.iter().filter(|r| r.valid) {
        let idx = match per_rep
            .iter()
            .position(|(e, n, _)| *e == r.experiment && *n == r.n)
        {
            Some(i) => i,
            None => {
                per_rep.push((r.experiment.clone(), r.n, Vec::new()));
                per_rep.len() - 1
            }
        };
        let reps = &mut per_rep[idx].2;
        match reps.iter_mut().find(|(rep, _)| *rep == r.replicate) {
            Some((_, v)) => *v = v.max(r.statistic),
            None => reps.push((r.replicate, r.statistic)),
        }
    }
    let summaries = per_rep
        .into_iter()
        .map(|(experiment, n, reps)| {
            let vals: Vec<f64> = reps.iter().map(|(_, v)| *v).collect();
            let (min, max) = extrema(&vals);
            Summary {
                experiment,
                n,
                replicates: vals.len(),
                median: median(&vals),
                min,
                max,
            }
        })
        .collect();
    (aggregates, summaries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

/// 17 significant digits.
fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.model,
            r.kernel.as_deref().unwrap_or(""),
            r.n,
            r.h.map(fmt_float).unwrap_or_default(),
            r.replicate,
            fmt_float(r.statistic),
            r.valid,
            r.seed
        );
    }
    out
}

/// Parses CSV produced by [`rows_to_csv`]. Error messages are not stored in CSV.
pub fn rows_from_csv(text: &str) -> Result<Vec<Row>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse("missing or unexpected CSV header".into()));
    }
    let bad = |i: usize, what: &str| Error::Parse(format!("CSV line {}: bad {what}", i + 2));
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(bad(i, "field count"));
            }
            Ok(Row {
                experiment: f[0].to_string(),
                model: f[1].to_string(),
                kernel: (!f[2].is_empty()).then(|| f[2].to_string()),
                n: f[3].parse().map_err(|_| bad(i, "n"))?,
                h: if f[4].is_empty() {
                    None
                } else {
                    Some(f[4].parse().map_err(|_| bad(i, "h"))?)
                },
                replicate: f[5].parse().map_err(|_| bad(i, "replicate"))?,
                statistic: f[6].parse().map_err(|_| bad(i, "statistic"))?,
                valid: f[7].parse().map_err(|_| bad(i, "valid"))?,
                seed: f[8].parse().map_err(|_| bad(i, "seed"))?,
                error: None,
            })
        })
        .collect()
}

pub fn render_report(report: &ExperimentReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => Ok(rows_to_csv(&report.rows)),
        ReportFormat::Json => serde_json::to_string_pretty(report)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::Evaluation(format!("JSON serialization failed: {e}"))),
    }
}

pub fn write_report(
    report: &ExperimentReport,
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    std::fs::write(path, render_report(report, format)?)?;
    Ok(())
}
