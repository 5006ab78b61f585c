//! Increments of empirical and quantile processes, and the statistics built on them.
//!
//! The crate is organized bottom-up:
//!
//! - [`distributions`]: analytic sampling laws with exact `F`, `Q`, `f`, `f'` and `q`.
//! - [`empirical`]: samples, the empirical distribution/quantile functions, the
//!   processes `alpha_n`, `beta_n`, `b_n` and their normalized increment fields.
//! - [`strassen`]: Dirichlet energy, membership and sup-norm distance to the
//!   Strassen ball, computed with a taut-string feasibility oracle.
//! - [`spacings`]: k-spacings and their maximal deviations.
//! - [`density`]: nearest-neighbor and Parzen-Rosenblatt density estimators and
//!   their uniform-in-bandwidth deviation statistics.
//! - [`harness`]: bandwidth plans, seeded replicate generation, Monte Carlo
//!   experiments and CSV/JSON reporting.

pub mod density;
pub mod distributions;
pub mod empirical;
pub mod error;
pub mod harness;
pub mod spacings;
pub mod strassen;

pub use error::{Error, Result};

/// `sqrt(2 h log(1/h))`, the normalization shared by every increment statistic.
///
/// Fails unless `0 < h < 1`.
pub fn increment_scale(h: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Domain(format!(
            "bandwidth h = {h} must satisfy 0 < h < 1"
        )));
    }
    let scale = (2.0 * h * (1.0 / h).ln()).sqrt();
    if scale > 0.0 && scale.is_finite() {
        Ok(scale)
    } else {
        Err(Error::Domain(format!("normalization vanishes at h = {h}")))
    }
}
