//! Bandwidth sequences, their evaluation grids and the hypothesis checker.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::iterated_log;
use crate::empirical::boundary_margin;
use crate::{Error, Result};

/// A bandwidth sequence `n ↦ h_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BandwidthRule {
    /// `coef · n^exponent`.
    Power { coef: f64, exponent: f64 },
    /// A fixed bandwidth.
    Constant { value: f64 },
}

impl BandwidthRule {
    pub fn power(exponent: f64) -> Self {
        BandwidthRule::Power {
            coef: 1.0,
            exponent,
        }
    }

    pub fn eval(&self, n: usize) -> f64 {
        match *self {
            BandwidthRule::Power { coef, exponent } => coef * (n as f64).powf(exponent),
            BandwidthRule::Constant { value } => value,
        }
    }

    /// `r` in `h_n = c n^{-r}`, if the rule is a power law.
    pub fn decay_rate(&self) -> Option<f64> {
        match *self {
            BandwidthRule::Power { exponent, .. } => Some(-exponent),
            BandwidthRule::Constant { .. } => None,
        }
    }
}

impl fmt::Display for BandwidthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BandwidthRule::Power { coef, exponent } if coef == 1.0 => write!(f, "n^{exponent}"),
            BandwidthRule::Power { coef, exponent } => write!(f, "{coef}*n^{exponent}"),
            BandwidthRule::Constant { value } => write!(f, "{value}"),
        }
    }
}

impl FromStr for BandwidthRule {
    type Err = Error;

    /// Accepts `n^-0.6`, `0.5*n^-0.6` and plain constants such as `0.01`.
    fn from_str(s: &str) -> Result<Self> {
        let txt: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse(format!("cannot parse bandwidth rule {s:?}"));
        if let Some(pos) = txt.find("n^") {
            let coef = match &txt[..pos] {
                "" => 1.0,
                head => head
                    .strip_suffix('*')
                    .ok_or_else(bad)?
                    .parse::<f64>()
                    .map_err(|_| bad())?,
            };
            let exponent = txt[pos + 2..]
                .trim_start_matches('(')
                .trim_end_matches(')')
                .parse::<f64>()
                .map_err(|_| bad())?;
            if !(coef > 0.0 && coef.is_finite() && exponent.is_finite()) {
                return Err(bad());
            }
            Ok(BandwidthRule::Power { coef, exponent })
        } else {
            let value = txt.parse::<f64>().map_err(|_| bad())?;
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::Parse(format!(
                    "constant bandwidth {value} must lie in (0, 1)"
                )));
            }
            Ok(BandwidthRule::Constant { value })
        }
    }
}

pub const DEFAULT_GRID_RATIO: f64 = 1.189_207_115_002_721; // 2^{1/4}

/// The pair `(h'_n, h''_n)` and the geometric evaluation grid between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPlan {
    pub h_lo: BandwidthRule,
    pub h_hi: BandwidthRule,
    pub grid_ratio: f64,
    pub description: String,
}

impl BandwidthPlan {
    pub fn new(h_lo: BandwidthRule, h_hi: BandwidthRule, grid_ratio: f64) -> Result<Self> {
        if !(grid_ratio > 1.0 && grid_ratio.is_finite()) {
            return Err(Error::Config(format!(
                "grid_ratio = {grid_ratio} must exceed 1"
            )));
        }
        Ok(BandwidthPlan {
            description: format!("h' = {h_lo}, h'' = {h_hi}, ratio {grid_ratio}"),
            h_lo,
            h_hi,
            grid_ratio,
        })
    }

    /// `(h'_n, h''_n)`, checked to satisfy `0 < h'_n ≤ h''_n < 1`.
    pub fn bounds(&self, n: usize) -> Result<(f64, f64)> {
        let (lo, hi) = (self.h_lo.eval(n), self.h_hi.eval(n));
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(Error::Config(format!(
                "bandwidths at n = {n} violate 0 < h' ≤ h'' < 1: h' = {lo}, h'' = {hi}"
            )));
        }
        Ok((lo, hi))
    }

    /// `h'_n · ratio^j` while below `h''_n`, then `h''_n` itself.
    pub fn h_grid(&self, n: usize) -> Result<Vec<f64>> {
        let (lo, hi) = self.bounds(n)?;
        let mut grid = Vec::new();
        let mut h = lo;
        let mut j = 0i32;
        // Stop short of points that would sit within a rounding error of h''.
        while h < hi * (1.0 - 1e-12) {
            grid.push(h);
            j += 1;
            h = lo * self.grid_ratio.powi(j);
        }
        grid.push(hi);
        Ok(grid)
    }
}

/// `(e_{n,h}, 1 − e_{n,h})` with `e_{n,h} = h + 25 log₂ n / n`.
pub fn t_range(n: usize, h: f64) -> Result<(f64, f64)> {
    let e = h + boundary_margin(n);
    if !(e < 0.5) {
        return Err(Error::EmptyRange(format!(
            "e_(n,h) = {e} ≥ 1/2 at n = {n}, h = {h}"
        )));
    }
    Ok((e, 1.0 - e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
}

impl Trend {
    pub fn of(values: &[f64]) -> Trend {
        let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        if diffs.iter().all(|&d| d > 0.0) {
            Trend::Increasing
        } else if diffs.iter().all(|&d| d < 0.0) {
            Trend::Decreasing
        } else if diffs.iter().all(|&d| d == 0.0) {
            Trend::Constant
        } else {
            Trend::Mixed
        }
    }
}

/// One hypothesis expression evaluated along `n_list`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub expression: String,
    pub values: Vec<f64>,
    pub trend: Trend,
    pub last: f64,
    /// Whether the finite-n trend points the way the hypothesis requires.
    pub satisfied: bool,
}

impl HypothesisCheck {
    fn new(name: &str, expression: &str, values: Vec<f64>, wanted: Trend) -> Self {
        let trend = Trend::of(&values);
        HypothesisCheck {
            name: name.into(),
            expression: expression.into(),
            last: *values.last().unwrap_or(&f64::NAN),
            satisfied: trend == wanted,
            values,
            trend,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum H4Verdict {
    SatisfiedByI,
    SatisfiedByIi,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub n_list: Vec<usize>,
    pub checks: Vec<HypothesisCheck>,
    pub h4: H4Verdict,
    /// For power plans `h' = n^{-r}`, `h'' = n^{-s}`: whether `s ≤ r < (1+s)/2`.
    pub power_law_h4ii: Option<bool>,
    pub warnings: Vec<String>,
}

impl HypothesisReport {
    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// H.1 to H.3 hold for both sequences and H.4 holds in some form.
    pub fn all_satisfied(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| {
                c.name.starts_with("H.1") || c.name.starts_with("H.2") || c.name.starts_with("H.3 ")
            })
            .all(|c| c.satisfied)
            && self.h4 != H4Verdict::Neither
    }
}

/// Evaluates the bandwidth hypotheses along `n_list` and reports finite-n trends.
pub fn check_hypotheses(plan: &BandwidthPlan, n_list: &[usize]) -> Result<HypothesisReport> {
    if n_list.len() < 3 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "n_list must be strictly increasing with at least 3 entries".into(),
        ));
    }
    let ln = |n: usize| (n as f64).ln();
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    for (tag, rule) in [("h'", plan.h_lo), ("h''", plan.h_hi)] {
        let h: Vec<f64> = n_list.iter().map(|&n| rule.eval(n)).collect();
        let nh: Vec<f64> = n_list.iter().zip(&h).map(|(&n, h)| n as f64 * h).collect();
        checks.push(HypothesisCheck::new(
            &format!("H.1 ({tag} decreasing)"),
            "h_n",
            h.clone(),
            Trend::Decreasing,
        ));
        checks.push(HypothesisCheck::new(
            &format!("H.1 ({tag} n h increasing)"),
            "n h_n",
            nh.clone(),
            Trend::Increasing,
        ));
        checks.push(HypothesisCheck::new(
            &format!("H.2 ({tag})"),
            "log(1/h_n) / log2(n)",
            n_list
                .iter()
                .zip(&h)
                .map(|(&n, h)| (1.0 / h).ln() / iterated_log(n as f64))
                .collect(),
            Trend::Increasing,
        ));
        checks.push(HypothesisCheck::new(
            &format!("H.3 ({tag})"),
            "n h_n / log n",
            n_list.iter().zip(&nh).map(|(&n, v)| v / ln(n)).collect(),
            Trend::Increasing,
        ));
        if h.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            warnings.push(format!("{tag} leaves (0, 1) on n_list"));
        }
    }
    let lo: Vec<f64> = n_list.iter().map(|&n| plan.h_lo.eval(n)).collect();
    let hi: Vec<f64> = n_list.iter().map(|&n| plan.h_hi.eval(n)).collect();
    if lo.iter().zip(&hi).any(|(a, b)| a > b) {
        warnings.push("h' exceeds h'' somewhere on n_list".into());
    }
    checks.push(HypothesisCheck::new(
        "H.3'",
        "n^{1/2} h'_n / log n",
        n_list
            .iter()
            .zip(&lo)
            .map(|(&n, h)| (n as f64).sqrt() * h / ln(n))
            .collect(),
        Trend::Increasing,
    ));
    let h4i = HypothesisCheck::new(
        "H.4(i)",
        "n^{1/2} h'_n log(1/h'_n) / (log n (log2 n)^{1/2})",
        n_list
            .iter()
            .zip(&lo)
            .map(|(&n, h)| {
                (n as f64).sqrt() * h * (1.0 / h).ln() / (ln(n) * iterated_log(n as f64).sqrt())
            })
            .collect(),
        Trend::Increasing,
    );
    // The printed display: sqrt(h'' log(1/h'')) / (h' log(1/h')) = o(sqrt(n)/log n).
    let h4ii = HypothesisCheck::new(
        "H.4(ii)",
        "[sqrt(h''_n log(1/h''_n)) / (h'_n log(1/h'_n))] / [n^{1/2} / log n]",
        n_list
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(&n, (a, b))| {
                ((b * (1.0 / b).ln()).sqrt() / (a * (1.0 / a).ln())) / ((n as f64).sqrt() / ln(n))
            })
            .collect(),
        Trend::Decreasing,
    );
    let h4 = if h4i.satisfied {
        H4Verdict::SatisfiedByI
    } else if h4ii.satisfied {
        H4Verdict::SatisfiedByIi
    } else {
        H4Verdict::Neither
    };
    checks.push(h4i);
    checks.push(h4ii);
    let power_law_h4ii = match (plan.h_lo.decay_rate(), plan.h_hi.decay_rate()) {
        (Some(r), Some(s)) => Some(0.0 < s && s <= r && r < 1.0 && r < (1.0 + s) / 2.0),
        _ => None,
    };
    if let Some(p) = power_law_h4ii {
        let printed = checks.iter().any(|c| c.name == "H.4(ii)" && c.satisfied);
        if p != printed {
            warnings.push(format!(
                "power-law criterion for H.4(ii) says {p}, printed expression trend says {printed}"
            ));
        }
    }
    Ok(HypothesisReport {
        n_list: n_list.to_vec(),
        checks,
        h4,
        power_law_h4ii,
        warnings,
    })
}
