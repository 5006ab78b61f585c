//! Experiment configuration and its flat `key = value` file format.
//!
//! ```text
//! # comment
//! experiment   = cor21
//! model        = uniform
//! n_list       = 10000, 100000, 1000000
//! h_lo         = n^-0.6
//! h_hi         = n^-0.4
//! replicates   = 20
//! master_seed  = 20240601
//! ```
//!
//! Keys not listed in [`ExperimentConfig`] are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bandwidth::{BandwidthPlan, BandwidthRule, DEFAULT_GRID_RATIO};
use crate::density::{kernel_by_name, Kernel};
use crate::distributions::{model_by_name, DistributionModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Thm21Dist,
    Thm21Cover,
    Cor21,
    Thm11,
    Thm31,
    Thm32,
    Thm33,
    Prop42,
    BkRate,
    CrRate,
    RadiusGap,
    Conj412,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 12] = [
        ExperimentKind::Thm21Dist,
        ExperimentKind::Thm21Cover,
        ExperimentKind::Cor21,
        ExperimentKind::Thm11,
        ExperimentKind::Thm31,
        ExperimentKind::Thm32,
        ExperimentKind::Thm33,
        ExperimentKind::Prop42,
        ExperimentKind::BkRate,
        ExperimentKind::CrRate,
        ExperimentKind::RadiusGap,
        ExperimentKind::Conj412,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Thm21Dist => "thm21_dist",
            ExperimentKind::Thm21Cover => "thm21_cover",
            ExperimentKind::Cor21 => "cor21",
            ExperimentKind::Thm11 => "thm11",
            ExperimentKind::Thm31 => "thm31",
            ExperimentKind::Thm32 => "thm32",
            ExperimentKind::Thm33 => "thm33",
            ExperimentKind::Prop42 => "prop42",
            ExperimentKind::BkRate => "bk_rate",
            ExperimentKind::CrRate => "cr_rate",
            ExperimentKind::RadiusGap => "radius_gap",
            ExperimentKind::Conj412 => "conj412",
        }
    }

    /// Experiments defined for uniform samples only.
    pub fn uniform_only(self) -> bool {
        matches!(
            self,
            ExperimentKind::Thm21Dist
                | ExperimentKind::Thm21Cover
                | ExperimentKind::Cor21
                | ExperimentKind::Thm31
                | ExperimentKind::BkRate
                | ExperimentKind::Conj412
        )
    }

    /// Experiments centered at the across-replicate mean.
    pub fn needs_centering(self) -> bool {
        matches!(self, ExperimentKind::Thm33 | ExperimentKind::Prop42)
    }

    pub fn needs_kernel(self) -> bool {
        self.needs_centering()
    }

    /// Experiments reporting one row per `(n, replicate)` with no bandwidth.
    pub fn bandwidth_free(self) -> bool {
        matches!(self, ExperimentKind::BkRate | ExperimentKind::CrRate)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: String,
    pub kernel: Option<String>,
    pub n_list: Vec<usize>,
    pub plan: BandwidthPlan,
    pub replicates: usize,
    pub master_seed: u64,
    /// Number of `s` nodes on `[-1, 1]`; odd.
    pub s_grid_size: usize,
    /// The `t`-grid step is `h / t_stride`.
    pub t_stride: usize,
    pub x_grid_size: usize,
    /// Quantile levels delimiting the density evaluation interval.
    pub t1: f64,
    pub t2: f64,
    /// Range of `t` for the coverage experiment.
    pub c1: f64,
    pub c2: f64,
    /// Number of `S₀` members checked by the coverage experiment.
    pub cover_elements: usize,
}

impl ExperimentConfig {
    /// Defaults for `experiment`: uniform model, plan `[n^-0.6, n^-0.4]`.
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            model: if experiment.uniform_only() || experiment == ExperimentKind::RadiusGap {
                "uniform".into()
            } else {
                "exp1".into()
            },
            kernel: experiment.needs_kernel().then(|| "uniform".to_string()),
            n_list: vec![1_000, 10_000, 100_000],
            plan: BandwidthPlan::new(
                BandwidthRule::power(-0.6),
                BandwidthRule::power(-0.4),
                DEFAULT_GRID_RATIO,
            )
            .expect("valid default plan"),
            replicates: if experiment.needs_centering() { 2 } else { 1 },
            master_seed: 0,
            s_grid_size: crate::empirical::DEFAULT_S_GRID,
            t_stride: 8,
            x_grid_size: 101,
            t1: 0.25,
            t2: 0.75,
            c1: 0.25,
            c2: 0.75,
            cover_elements: 5,
        }
    }

    pub fn model(&self) -> Result<DistributionModel> {
        model_by_name(&self.model)
            .ok_or_else(|| Error::Config(format!("unknown model {:?}", self.model)))
    }

    pub fn kernel(&self) -> Result<Option<Kernel>> {
        self.kernel
            .as_deref()
            .map(|k| {
                kernel_by_name(k).ok_or_else(|| Error::Config(format!("unknown kernel {k:?}")))
            })
            .transpose()
    }

    /// Checks every invariant that does not require running the experiment.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let model = self.model()?;
        let kernel = self.kernel()?;
        if self.experiment.uniform_only() && !model.is_uniform() {
            return bad(format!(
                "{} is defined for uniform samples; got model {}",
                self.experiment, self.model
            ));
        }
        if self.experiment.needs_kernel() && kernel.is_none() {
            return bad(format!("{} needs a kernel", self.experiment));
        }
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_list must be nonempty and strictly increasing".into());
        }
        if self.n_list[0] < 2 {
            return bad("sample sizes must be at least 2".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.experiment.needs_centering() && self.replicates < 2 {
            return bad(format!("{} needs at least 2 replicates", self.experiment));
        }
        if self.s_grid_size < 3 || self.s_grid_size % 2 == 0 {
            return bad(format!(
                "s_grid_size = {} must be odd and ≥ 3",
                self.s_grid_size
            ));
        }
        if self.t_stride == 0 {
            return bad("t_stride must be positive".into());
        }
        if self.x_grid_size < 2 {
            return bad("x_grid_size must be at least 2".into());
        }
        if !(0.0 < self.t1 && self.t1 < self.t2 && self.t2 < 1.0) {
            return bad(format!(
                "need 0 < t1 < t2 < 1, got {} and {}",
                self.t1, self.t2
            ));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return bad(format!(
                "need 0 < c1 < c2 < 1, got {} and {}",
                self.c1, self.c2
            ));
        }
        if self.cover_elements == 0 {
            return bad("cover_elements must be positive".into());
        }
        if !self.experiment.bandwidth_free() {
            for &n in &self.n_list {
                self.plan.bounds(n)?;
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }

    /// The configuration in the file format accepted by [`FromStr`].
    pub fn to_text(&self) -> String {
        let n_list: Vec<String> = self.n_list.iter().map(|n| n.to_string()).collect();
        let mut out = format!("experiment = {}\nmodel = {}\n", self.experiment, self.model);
        if let Some(k) = &self.kernel {
            out += &format!("kernel = {k}\n");
        }
        out += &format!(
            "n_list = {}\nh_lo = {}\nh_hi = {}\ngrid_ratio = {}\nreplicates = {}\n\
             master_seed = {}\ns_grid_size = {}\nt_stride = {}\nx_grid_size = {}\n\
             t1 = {}\nt2 = {}\nc1 = {}\nc2 = {}\ncover_elements = {}\n",
            n_list.join(", "),
            self.plan.h_lo,
            self.plan.h_hi,
            self.plan.grid_ratio,
            self.replicates,
            self.master_seed,
            self.s_grid_size,
            self.t_stride,
            self.x_grid_size,
            self.t1,
            self.t2,
            self.c1,
            self.c2,
            self.cover_elements,
        );
        out
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parse(format!("bad value {v:?} for key {key}")))
}

/// Integers, also accepting `1e5`-style literals with integral value.
fn parse_count(key: &str, v: &str) -> Result<usize> {
    if let Ok(n) = v.parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = parse_num(key, v)?;
    if x >= 0.0 && x.fract() == 0.0 && x < 1e15 {
        Ok(x as usize)
    } else {
        Err(Error::Parse(format!("bad integer {v:?} for key {key}")))
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut pairs: Vec<(String, String, usize)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = k.trim().to_string();
            if pairs.iter().any(|(p, _, _)| *p == key) {
                return Err(Error::Parse(format!(
                    "line {}: duplicate key {key}",
                    lineno + 1
                )));
            }
            pairs.push((key, v.trim().to_string(), lineno + 1));
        }
        let experiment: ExperimentKind = pairs
            .iter()
            .find(|(k, _, _)| k == "experiment")
            .ok_or_else(|| Error::Config("missing key: experiment".into()))?
            .1
            .parse()?;
        let mut cfg = ExperimentConfig::new(experiment);
        let mut h_lo = cfg.plan.h_lo;
        let mut h_hi = cfg.plan.h_hi;
        let mut grid_ratio = cfg.plan.grid_ratio;
        for (key, v, lineno) in &pairs {
            let v = v.as_str();
            match key.as_str() {
                "experiment" => {}
                "model" => cfg.model = v.to_string(),
                "kernel" => {
                    cfg.kernel = match v {
                        "" | "none" => None,
                        k => Some(k.to_string()),
                    }
                }
                "n_list" => {
                    cfg.n_list = v
                        .split(',')
                        .map(|s| parse_count(key, s.trim()))
                        .collect::<Result<_>>()?
                }
                "h_lo" => h_lo = v.parse()?,
                "h_hi" => h_hi = v.parse()?,
                "grid_ratio" => grid_ratio = parse_num(key, v)?,
                "replicates" => cfg.replicates = parse_count(key, v)?,
                "master_seed" => cfg.master_seed = parse_num(key, v)?,
                "s_grid_size" => cfg.s_grid_size = parse_count(key, v)?,
                "t_stride" => cfg.t_stride = parse_count(key, v)?,
                "x_grid_size" => cfg.x_grid_size = parse_count(key, v)?,
                "t1" => cfg.t1 = parse_num(key, v)?,
                "t2" => cfg.t2 = parse_num(key, v)?,
                "c1" => cfg.c1 = parse_num(key, v)?,
                "c2" => cfg.c2 = parse_num(key, v)?,
                "cover_elements" => cfg.cover_elements = parse_count(key, v)?,
                other => return Err(Error::Config(format!("line {lineno}: unknown key {other}"))),
            }
        }
        cfg.plan = BandwidthPlan::new(h_lo, h_hi, grid_ratio)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
