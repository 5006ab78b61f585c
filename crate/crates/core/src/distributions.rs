//! Analytic sampling laws.
//!
//! Every builtin model is given by closed forms for the distribution function,
//! quantile function, density, density derivative and quantile density. No
//! model inverts its distribution function numerically.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `log(x ∨ e)`.
pub fn log_plus(x: f64) -> f64 {
    x.max(E).ln()
}

/// The iterated logarithm `log₊ log₊ x`. Equals 1 for every `x ≤ e^e`.
pub fn iterated_log(x: f64) -> f64 {
    log_plus(log_plus(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Uniform on `[0, 1]`.
    Uniform,
    /// Exponential with unit rate.
    Exponential,
    /// Standard logistic.
    Logistic,
}

/// A sampling law satisfying the smoothness, positivity and density-ratio
/// conditions used by the increment limit laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionModel {
    pub name: &'static str,
    pub family: Family,
    /// Constant bounding `t(1-t)|f'(Q(t))|/f²(Q(t))` over `(0, 1)`.
    pub gamma: f64,
    /// Endpoints `(u1, u2)` of the support, possibly infinite.
    pub support: (f64, f64),
    /// Whether the density has finite, strictly positive limits at both endpoints.
    pub f45_satisfied: bool,
}

impl DistributionModel {
    pub fn uniform() -> Self {
        DistributionModel {
            name: "uniform",
            family: Family::Uniform,
            gamma: 0.0,
            support: (0.0, 1.0),
            f45_satisfied: true,
        }
    }

    pub fn exponential() -> Self {
        DistributionModel {
            name: "exp1",
            family: Family::Exponential,
            gamma: 1.0,
            support: (0.0, f64::INFINITY),
            f45_satisfied: false,
        }
    }

    pub fn logistic() -> Self {
        DistributionModel {
            name: "logistic",
            family: Family::Logistic,
            gamma: 1.0,
            support: (f64::NEG_INFINITY, f64::INFINITY),
            f45_satisfied: false,
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.family == Family::Uniform
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform => x.clamp(0.0, 1.0),
            Family::Exponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x).exp_m1()
                }
            }
            Family::Logistic => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Quantile function on `[0, 1]`; endpoints map to the support endpoints.
    pub fn quantile(&self, t: f64) -> f64 {
        match self.family {
            Family::Uniform => t,
            Family::Exponential => -(-t).ln_1p(),
            Family::Logistic => (t / (1.0 - t)).ln(),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Exponential => {
                if x < 0.0 {
                    0.0
                } else {
                    (-x).exp()
                }
            }
            Family::Logistic => {
                // e^{-|x|} / (1 + e^{-|x|})², symmetric and overflow-free.
                let e = (-x.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
        }
    }

    pub fn density_derivative(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform => 0.0,
            Family::Exponential => {
                if x < 0.0 {
                    0.0
                } else {
                    -(-x).exp()
                }
            }
            Family::Logistic => self.density(x) * (1.0 - 2.0 * self.cdf(x)),
        }
    }

    /// `q(t) = Q'(t) = 1/f(Q(t))` without the domain check.
    pub(crate) fn quantile_density_raw(&self, t: f64) -> f64 {
        match self.family {
            Family::Uniform => 1.0,
            Family::Exponential => 1.0 / (1.0 - t),
            Family::Logistic => 1.0 / (t * (1.0 - t)),
        }
    }

    /// The quantile density `q(t) = 1/f(Q(t))` for `0 < t < 1`.
    pub fn quantile_density(&self, t: f64) -> Result<f64> {
        check_open_unit("t", t)?;
        Ok(self.quantile_density_raw(t))
    }

    /// Value of `t(1-t)|f'(Q(t))|/f²(Q(t))`.
    pub fn f3_expression(&self, t: f64) -> Result<f64> {
        let x = self.quantile(t);
        let f = self.density(x);
        if f <= 0.0 || !f.is_finite() {
            return Err(Error::Evaluation(format!(
                "density underflows at t = {t} for model {}",
                self.name
            )));
        }
        Ok(t * (1.0 - t) * self.density_derivative(x).abs() / (f * f))
    }

    /// Maximum of the density-ratio expression over the open grid
    /// `j/(g+1)`, `j = 1..=g`.
    pub fn f3_supremum(&self, grid_size: usize) -> Result<f64> {
        if grid_size < 2 {
            return Err(Error::Range(format!("grid_size = {grid_size} < 2")));
        }
        let denom = (grid_size + 1) as f64;
        let mut sup = 0.0f64;
        for j in 1..=grid_size {
            sup = sup.max(self.f3_expression(j as f64 / denom)?);
        }
        Ok(sup)
    }

    /// Checks the quantile-density ratio bound
    /// `q(y2)/q(y1) ≤ {(y1∨y2)/(y1∧y2) · (1-(y1∧y2))/(1-(y1∨y2))}^γ`
    /// with relative tolerance `1e-9`.
    pub fn fact41_holds(&self, y1: f64, y2: f64) -> Result<bool> {
        check_open_unit("y1", y1)?;
        check_open_unit("y2", y2)?;
        let lhs = self.quantile_density_raw(y2) / self.quantile_density_raw(y1);
        let (lo, hi) = (y1.min(y2), y1.max(y2));
        let rhs = ((hi / lo) * ((1.0 - lo) / (1.0 - hi))).powf(self.gamma);
        Ok(lhs <= rhs * (1.0 + 1e-9))
    }
}

/// Uniform(0,1), Exponential(1) and Logistic(0,1).
pub fn builtin_models() -> Vec<DistributionModel> {
    vec![
        DistributionModel::uniform(),
        DistributionModel::exponential(),
        DistributionModel::logistic(),
    ]
}

/// Looks up a builtin model by its CLI name.
pub fn model_by_name(name: &str) -> Option<DistributionModel> {
    builtin_models().into_iter().find(|m| m.name == name)
}

pub(crate) fn check_open_unit(label: &str, t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{label} = {t} is outside (0, 1)")))
    }
}
